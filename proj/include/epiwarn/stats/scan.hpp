#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "epiwarn/stats/ad.hpp"
#include "epiwarn/stats/ks.hpp"
#include "epiwarn/stats/weighted_sample.hpp"

namespace epiwarn {

// Window widths (in days) averaged by the moving scan.
inline constexpr int kScanWidthMin = 50;
inline constexpr int kScanWidthMax = 70;

// Mean by pairwise (cascade) summation: a fixed, platform-stable reduction
// order regardless of how many widths or baselines contributed.
inline double pairwise_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty range");
    struct Rec {
        static double sum(std::span<const double> v) {
            if (v.size() == 1) return v[0];
            if (v.size() == 2) return v[0] + v[1];
            const std::size_t half = v.size() / 2;
            return sum(v.first(half)) + sum(v.subspan(half));
        }
    };
    return Rec::sum(xs) / double(xs.size());
}

// How a window slice becomes a test sample. `message_mass` (default) treats
// each counted message as one observation of its day offset, so sample size
// is the message total. `day_values` treats the w daily counts themselves as
// w observations, so sample size is the width.
enum class SampleMode { message_mass, day_values };

struct ScanParams {
    int width_min = kScanWidthMin;
    int width_max = kScanWidthMax;
    TestMethod method = TestMethod::ks;
    SampleMode sample_mode = SampleMode::message_mass;
    std::int64_t exact_crossover = kKsExactCrossover;
};

// Build the test sample for one window slice under the chosen mode.
inline WeightedSample window_sample(std::span<const std::int64_t> slice, SampleMode mode) {
    if (mode == SampleMode::message_mass) return WeightedSample::from_counts(slice);
    std::vector<int> values;
    values.reserve(slice.size());
    for (const std::int64_t c : slice) {
        if (c < 0) throw std::invalid_argument("negative count");
        if (c > INT32_MAX) throw std::invalid_argument("count too large for day-value sample");
        values.push_back(int(c));
    }
    return WeightedSample::from_values(std::move(values));
}

// One scanned day: the season-axis index the window ends on, and the
// width-averaged p-value. Days where every width was skipped (no usable
// pair of samples) carry no value and plot as gaps.
struct PValuePoint {
    int axis_index = 0;
    std::optional<double> p;
};

struct PValueCurve {
    std::vector<PValuePoint> points;
    int width_min = kScanWidthMin;
    int width_max = kScanWidthMax;
    TestMethod method = TestMethod::ks;
};

// Slide a window ending on each day of [scan_start, scan_end] (season-axis
// indices) across two seasons of daily counts. For each width w in
// [width_min, width_max] the window covers axis days [d-w+1, d]; both
// seasons are sliced over the same index range, counts become weights over
// day offsets 0..w-1, and the two-sample test compares them. Widths where
// either slice is empty (or the window starts before the axis origin) are
// skipped; surviving p-values are averaged per day.
inline PValueCurve window_scan(std::span<const std::int64_t> season_a,
                               std::span<const std::int64_t> season_b,
                               int scan_start, int scan_end, const ScanParams& params = {}) {
    if (season_a.size() != season_b.size())
        throw std::invalid_argument("season series must cover the same axis");
    if (scan_start > scan_end || scan_start < 0 ||
        std::size_t(scan_end) >= season_a.size())
        throw std::invalid_argument("scan range outside season axis");
    if (params.width_min < 1 || params.width_min > params.width_max)
        throw std::invalid_argument("bad window width range");

    PValueCurve curve;
    curve.width_min = params.width_min;
    curve.width_max = params.width_max;
    curve.method = params.method;
    curve.points.reserve(std::size_t(scan_end - scan_start + 1));
    std::vector<double> per_width;
    for (int d = scan_start; d <= scan_end; ++d) {
        per_width.clear();
        for (int w = params.width_min; w <= params.width_max; ++w) {
            const int s = d - w + 1;
            if (s < 0) continue;
            const auto slice_a = season_a.subspan(std::size_t(s), std::size_t(w));
            const auto slice_b = season_b.subspan(std::size_t(s), std::size_t(w));
            // a width with no message mass on either side cannot be tested
            std::int64_t mass_a = 0, mass_b = 0;
            for (const auto c : slice_a) mass_a += c;
            for (const auto c : slice_b) mass_b += c;
            if (mass_a == 0 || mass_b == 0) continue;
            const auto sample_a = window_sample(slice_a, params.sample_mode);
            const auto sample_b = window_sample(slice_b, params.sample_mode);
            const TestResult r = params.method == TestMethod::ks
                                     ? ks_two_sample(sample_a, sample_b, params.exact_crossover)
                                     : ad_two_sample(sample_a, sample_b);
            per_width.push_back(r.p_value);
        }
        PValuePoint pt;
        pt.axis_index = d;
        if (!per_width.empty()) pt.p = pairwise_mean(per_width);
        curve.points.push_back(pt);
    }
    return curve;
}

// Scan the season of interest against several baseline seasons and average
// the curves pointwise. A day's value is the mean over baselines that
// produced one; a day every baseline skipped stays a gap.
inline PValueCurve multi_baseline_scan(std::span<const std::int64_t> season,
                                       const std::vector<std::vector<std::int64_t>>& baselines,
                                       int scan_start, int scan_end,
                                       const ScanParams& params = {}) {
    if (baselines.empty()) throw std::invalid_argument("no baseline seasons");
    std::vector<PValueCurve> curves;
    curves.reserve(baselines.size());
    for (const auto& b : baselines)
        curves.push_back(window_scan(season, b, scan_start, scan_end, params));
    PValueCurve out;
    out.width_min = params.width_min;
    out.width_max = params.width_max;
    out.method = params.method;
    const std::size_t days = curves.front().points.size();
    out.points.reserve(days);
    std::vector<double> vals;
    for (std::size_t i = 0; i < days; ++i) {
        vals.clear();
        for (const auto& c : curves)
            if (c.points[i].p) vals.push_back(*c.points[i].p);
        PValuePoint pt;
        pt.axis_index = curves.front().points[i].axis_index;
        if (!vals.empty()) pt.p = pairwise_mean(vals);
        out.points.push_back(pt);
    }
    return out;
}

// A maximal run of consecutive scanned days whose averaged p-value is
// strictly below the threshold. Gap days never belong to a run.
struct AnomalyPeriod {
    int first_axis_index = 0;
    int last_axis_index = 0;
    double min_p = 1.0;
    double alpha = 0.05;
};

inline std::vector<AnomalyPeriod> extract_anomaly_periods(const PValueCurve& curve,
                                                          double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha outside (0,1)");
    std::vector<AnomalyPeriod> out;
    bool open = false;
    AnomalyPeriod cur;
    for (const auto& pt : curve.points) {
        const bool hot = pt.p.has_value() && *pt.p < alpha;
        if (hot) {
            if (!open) {
                cur = AnomalyPeriod{pt.axis_index, pt.axis_index, *pt.p, alpha};
                open = true;
            } else {
                cur.last_axis_index = pt.axis_index;
                cur.min_p = std::min(cur.min_p, *pt.p);
            }
        } else if (open) {
            out.push_back(cur);
            open = false;
        }
    }
    if (open) out.push_back(cur);
    return out;
}

}  // namespace epiwarn
