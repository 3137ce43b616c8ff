#include <catch2/catch_amalgamated.hpp>

#include <epiwarn/stats/scan.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

using namespace epiwarn;

namespace {

std::vector<std::int64_t> season_pattern_a() {
    std::vector<std::int64_t> v(365);
    for (int i = 0; i < 365; ++i) v[std::size_t(i)] = 3 + (i * 7) % 5;
    return v;
}

std::vector<std::int64_t> season_pattern_b() {
    std::vector<std::int64_t> v(365);
    for (int i = 0; i < 365; ++i) v[std::size_t(i)] = 2 + (i * 3) % 7;
    return v;
}

double day_p(std::span<const std::int64_t> a, std::span<const std::int64_t> b, int d,
             const ScanParams& params) {
    std::vector<double> per_width;
    for (int w = params.width_min; w <= params.width_max; ++w) {
        const int s = d - w + 1;
        if (s < 0) continue;
        const auto sa = a.subspan(std::size_t(s), std::size_t(w));
        const auto sb = b.subspan(std::size_t(s), std::size_t(w));
        std::int64_t ma = 0, mb = 0;
        for (const auto c : sa) ma += c;
        for (const auto c : sb) mb += c;
        if (ma == 0 || mb == 0) continue;
        const auto wa = window_sample(sa, params.sample_mode);
        const auto wb = window_sample(sb, params.sample_mode);
        const TestResult r = params.method == TestMethod::ks
                                 ? ks_two_sample(wa, wb, params.exact_crossover)
                                 : ad_two_sample(wa, wb);
        per_width.push_back(r.p_value);
    }
    return pairwise_mean(per_width);
}

}  // namespace

TEST_CASE("pairwise mean is exact on small inputs and rejects empties") {
    const double one[] = {4.0};
    CHECK(pairwise_mean(one) == 4.0);
    const double two[] = {1.0, 2.0};
    CHECK(pairwise_mean(two) == 1.5);
    const double four[] = {1.0, 2.0, 3.0, 4.0};
    CHECK(pairwise_mean(four) == 2.5);
    CHECK_THROWS_AS(pairwise_mean(std::span<const double>{}), std::invalid_argument);
}

TEST_CASE("window samples encode mass-per-offset or the day values themselves") {
    const std::int64_t slice[] = {3, 0, 2};

    WeightedSample mass = window_sample(slice, SampleMode::message_mass);
    CHECK(mass.support == std::vector<int>{0, 1, 2});
    CHECK(mass.weights == std::vector<std::int64_t>{3, 0, 2});
    CHECK(mass.total() == 5);

    WeightedSample days = window_sample(slice, SampleMode::day_values);
    CHECK(days.support == std::vector<int>{0, 2, 3});
    CHECK(days.weights == std::vector<std::int64_t>{1, 1, 1});
    CHECK(days.total() == 3);

    const std::int64_t negative[] = {1, -1};
    CHECK_THROWS_AS(window_sample(negative, SampleMode::day_values), std::invalid_argument);
}

TEST_CASE("each scanned day averages exactly the surviving per-width p-values") {
    const auto a = season_pattern_a();
    const auto b = season_pattern_b();
    const ScanParams params{};
    PValueCurve curve = window_scan(a, b, 105, 142, params);
    REQUIRE(curve.points.size() == 38);
    CHECK(curve.points.front().axis_index == 105);
    CHECK(curve.points.back().axis_index == 142);

    for (const auto& pt : curve.points) {
        REQUIRE(pt.p.has_value());
        CHECK(*pt.p == day_p(a, b, pt.axis_index, params));

        // the average lies inside the per-width envelope
        std::vector<double> per_width;
        for (int w = params.width_min; w <= params.width_max; ++w) {
            const int s = pt.axis_index - w + 1;
            if (s < 0) continue;
            const auto wa = window_sample(std::span(a).subspan(std::size_t(s), std::size_t(w)),
                                          params.sample_mode);
            const auto wb = window_sample(std::span(b).subspan(std::size_t(s), std::size_t(w)),
                                          params.sample_mode);
            per_width.push_back(ks_two_sample(wa, wb, params.exact_crossover).p_value);
        }
        const auto [lo, hi] = std::minmax_element(per_width.begin(), per_width.end());
        CHECK(*pt.p >= *lo);
        CHECK(*pt.p <= *hi);
    }
}

TEST_CASE("comparing a season against itself yields p = 1 on every day") {
    std::vector<std::int64_t> flat(365, 5);
    PValueCurve ks = window_scan(flat, flat, 105, 142, ScanParams{});
    for (const auto& pt : ks.points) {
        REQUIRE(pt.p.has_value());
        CHECK(*pt.p == 1.0);
    }

    ScanParams day_mode{};
    day_mode.sample_mode = SampleMode::day_values;
    PValueCurve days = window_scan(flat, flat, 105, 142, day_mode);
    for (const auto& pt : days.points) CHECK(*pt.p == 1.0);

    // identical samples carry no Anderson-Darling evidence either
    ScanParams ad{};
    ad.method = TestMethod::ad;
    PValueCurve ad_curve = window_scan(flat, flat, 105, 142, ad);
    for (const auto& pt : ad_curve.points) CHECK(*pt.p == 0.25);
}

TEST_CASE("days with no usable width stay gaps") {
    std::vector<std::int64_t> a(365, 4);
    std::vector<std::int64_t> empty(365, 0);
    PValueCurve curve = window_scan(a, empty, 105, 142, ScanParams{});
    for (const auto& pt : curve.points) CHECK_FALSE(pt.p.has_value());
    CHECK(extract_anomaly_periods(curve, 0.05).empty());

    // mass appearing late in the baseline turns later days back on
    std::vector<std::int64_t> late(365, 0);
    for (int i = 110; i < 365; ++i) late[std::size_t(i)] = 4;
    PValueCurve partial = window_scan(a, late, 105, 142, ScanParams{});
    CHECK_FALSE(partial.points[0].p.has_value());   // windows end at 105, mass starts at 110
    CHECK(partial.points.back().p.has_value());
}

TEST_CASE("anomaly runs are strict, contiguous and broken by gaps") {
    PValueCurve curve;
    const auto add = [&](int idx, std::optional<double> p) {
        curve.points.push_back(PValuePoint{idx, p});
    };
    add(100, 0.01);
    add(101, 0.02);
    add(102, std::nullopt);  // gap splits the run
    add(103, 0.03);
    add(104, 0.05);          // exactly alpha: not an anomaly
    add(105, 0.04);
    add(106, 0.2);
    add(107, 0.001);         // run reaching the end of the scan is closed

    auto segments = extract_anomaly_periods(curve, 0.05);
    REQUIRE(segments.size() == 4);
    CHECK(segments[0].first_axis_index == 100);
    CHECK(segments[0].last_axis_index == 101);
    CHECK(segments[0].min_p == 0.01);
    CHECK(segments[0].alpha == 0.05);
    CHECK(segments[1].first_axis_index == 103);
    CHECK(segments[1].last_axis_index == 103);
    CHECK(segments[2].first_axis_index == 105);
    CHECK(segments[2].last_axis_index == 105);
    CHECK(segments[3].first_axis_index == 107);
    CHECK(segments[3].last_axis_index == 107);

    // only the 0.001 point survives a tighter threshold
    auto tight = extract_anomaly_periods(curve, 0.002);
    REQUIRE(tight.size() == 1);
    CHECK(tight[0].first_axis_index == 107);
    CHECK_THROWS_AS(extract_anomaly_periods(curve, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(extract_anomaly_periods(curve, 1.0), std::invalid_argument);
}

TEST_CASE("anomaly segments nest as alpha tightens") {
    // flat baseline, focal season with a strong mid-January surge
    std::vector<std::int64_t> baseline(365, 5);
    std::vector<std::int64_t> focal(365, 5);
    for (int i = 118; i <= 130; ++i) focal[std::size_t(i)] = 40;

    PValueCurve curve = window_scan(focal, baseline, 105, 142, ScanParams{});
    auto strict = extract_anomaly_periods(curve, 0.02);
    auto loose = extract_anomaly_periods(curve, 0.10);
    REQUIRE_FALSE(loose.empty());

    // every strict segment lies inside some loose segment
    for (const auto& s : strict) {
        bool contained = false;
        for (const auto& l : loose)
            if (l.first_axis_index <= s.first_axis_index && s.last_axis_index <= l.last_axis_index)
                contained = true;
        CHECK(contained);
    }

    // and every strict anomaly day is also a loose anomaly day
    for (const auto& pt : curve.points)
        if (pt.p && *pt.p < 0.02) CHECK(*pt.p < 0.10);
}

TEST_CASE("multi-baseline curves are the pointwise mean of per-baseline curves") {
    const auto focal = season_pattern_a();
    const auto b1 = season_pattern_b();
    std::vector<std::int64_t> b2(365, 6);
    const ScanParams params{};

    PValueCurve c1 = window_scan(focal, b1, 105, 142, params);
    PValueCurve c2 = window_scan(focal, b2, 105, 142, params);
    PValueCurve multi = multi_baseline_scan(focal, {b1, b2}, 105, 142, params);

    REQUIRE(multi.points.size() == c1.points.size());
    for (std::size_t i = 0; i < multi.points.size(); ++i) {
        REQUIRE(multi.points[i].p.has_value());
        const double expected[] = {*c1.points[i].p, *c2.points[i].p};
        CHECK(*multi.points[i].p == pairwise_mean(expected));
    }
}

TEST_CASE("baselines that skip a day drop out of that day's average") {
    const auto focal = season_pattern_a();
    const auto live = season_pattern_b();
    std::vector<std::int64_t> sleepy(365, 0);
    for (int i = 120; i < 365; ++i) sleepy[std::size_t(i)] = 3;

    PValueCurve c_live = window_scan(focal, live, 105, 142, ScanParams{});
    PValueCurve c_sleepy = window_scan(focal, sleepy, 105, 142, ScanParams{});
    PValueCurve multi = multi_baseline_scan(focal, {live, sleepy}, 105, 142, ScanParams{});

    for (std::size_t i = 0; i < multi.points.size(); ++i) {
        if (c_sleepy.points[i].p) {
            const double both[] = {*c_live.points[i].p, *c_sleepy.points[i].p};
            CHECK(*multi.points[i].p == pairwise_mean(both));
        } else {
            // only the live baseline contributes
            CHECK(*multi.points[i].p == *c_live.points[i].p);
        }
    }

    CHECK_THROWS_AS(multi_baseline_scan(focal, {}, 105, 142, ScanParams{}),
                    std::invalid_argument);
}

TEST_CASE("scan rejects malformed ranges and widths") {
    std::vector<std::int64_t> a(365, 1), b(365, 1), shorter(100, 1);
    CHECK_THROWS_AS(window_scan(a, shorter, 10, 20, ScanParams{}), std::invalid_argument);
    CHECK_THROWS_AS(window_scan(a, b, -1, 20, ScanParams{}), std::invalid_argument);
    CHECK_THROWS_AS(window_scan(a, b, 10, 365, ScanParams{}), std::invalid_argument);
    CHECK_THROWS_AS(window_scan(a, b, 30, 20, ScanParams{}), std::invalid_argument);

    ScanParams bad_width{};
    bad_width.width_min = 0;
    CHECK_THROWS_AS(window_scan(a, b, 10, 20, bad_width), std::invalid_argument);
    bad_width.width_min = 10;
    bad_width.width_max = 5;
    CHECK_THROWS_AS(window_scan(a, b, 10, 20, bad_width), std::invalid_argument);

    // widths larger than the scanned prefix are skipped, not fatal
    ScanParams wide{};
    wide.width_min = 40;
    wide.width_max = 45;
    PValueCurve early = window_scan(a, b, 20, 25, wide);
    for (const auto& pt : early.points) CHECK_FALSE(pt.p.has_value());
}
