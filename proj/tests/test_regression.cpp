#include <catch2/catch_amalgamated.hpp>

#include <epiwarn/stats/regression.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace epiwarn;
using Catch::Matchers::WithinAbs;

namespace {

// Independent least-squares solution straight from the normal equations.
RegressionFit normal_equations(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    RegressionFit fit;
    fit.n = xs.size();
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

}  // namespace

TEST_CASE("relative variation matches season-over-season table arithmetic") {
    CHECK_THAT(relative_variation(293, 477).value, WithinAbs(0.63, 0.005));
    CHECK(format_variation(relative_variation(293, 477)) == "0.63");

    CHECK_THAT(relative_variation(4, 14).value, WithinAbs(2.50, 0.005));
    CHECK(format_variation(relative_variation(4, 14)) == "2.50");

    CHECK_THAT(relative_variation(603, 1756).value, WithinAbs(1.91, 0.005));
    CHECK_THAT(relative_variation(52, 203).value, WithinAbs(2.90, 0.005));
    CHECK_THAT(relative_variation(1, 11).value, WithinAbs(10.00, 0.005));

    CHECK(relative_variation(20, 10).value == -0.5);
    CHECK(relative_variation(17, 17).value == 0.0);
}

TEST_CASE("a count appearing from nothing reports as new") {
    const RelativeVariation fresh = relative_variation(0, 9);
    CHECK(fresh.fresh);
    CHECK(format_variation(fresh) == "new");

    const RelativeVariation still_empty = relative_variation(0, 0);
    CHECK_FALSE(still_empty.fresh);
    CHECK(still_empty.value == 0.0);
    CHECK(format_variation(still_empty) == "0.00");

    CHECK(format_variation(relative_variation(8, 10), 3) == "0.250");

    CHECK_THROWS_AS(relative_variation(-1, 3), std::invalid_argument);
    CHECK_THROWS_AS(relative_variation(3, -1), std::invalid_argument);
}

TEST_CASE("an exact power law is recovered to full precision") {
    // y = 2.5 * x^-1.2
    std::vector<double> xs, ys;
    for (int i = 1; i <= 40; ++i) {
        const double x = double(i) * 13.0;
        xs.push_back(x);
        ys.push_back(2.5 * std::pow(x, -1.2));
    }
    const RegressionFit fit = loglog_fit(xs, ys);
    CHECK(fit.n == 40);
    CHECK_THAT(fit.slope, WithinAbs(-1.2, 1e-6));
    CHECK_THAT(fit.intercept, WithinAbs(std::log(2.5), 1e-6));
    CHECK(fit.r2 >= 1.0 - 1e-12);
    CHECK(fit.r2 <= 1.0);
}

TEST_CASE("noisy fits agree with the normal equations") {
    std::mt19937_64 gen(424242);
    std::uniform_real_distribution<double> noise(-0.4, 0.4);
    std::uniform_real_distribution<double> slope_pick(-2.0, 2.0);
    std::uniform_int_distribution<int> size_pick(3, 60);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = size_pick(gen);
        const double beta = slope_pick(gen);
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i) {
            const double x = 10.0 + 5.0 * i;
            xs.push_back(x);
            ys.push_back(std::exp(0.7 + beta * std::log(x) + noise(gen)));
        }
        const RegressionFit fit = loglog_fit(xs, ys);
        const RegressionFit oracle = normal_equations(xs, ys);
        CHECK_THAT(fit.slope, WithinAbs(oracle.slope, 1e-9));
        CHECK_THAT(fit.intercept, WithinAbs(oracle.intercept, 1e-9));
        CHECK(fit.r2 >= 0.0);
        CHECK(fit.r2 <= 1.0);
    }
}

TEST_CASE("rescaling the x axis moves only the intercept") {
    std::vector<double> xs = {120, 340, 980, 2500, 7200, 15000};
    std::vector<double> ys = {9.0, 6.5, 4.2, 2.0, 1.4, 0.8};
    const RegressionFit base = loglog_fit(xs, ys);

    std::vector<double> scaled = xs;
    for (auto& x : scaled) x *= 1000.0;  // e.g. population expressed in raw persons
    const RegressionFit shifted = loglog_fit(scaled, ys);

    CHECK_THAT(shifted.slope, WithinAbs(base.slope, 1e-9));
    CHECK_THAT(shifted.r2, WithinAbs(base.r2, 1e-9));
    CHECK_THAT(shifted.intercept, WithinAbs(base.intercept - base.slope * std::log(1000.0), 1e-9));
}

TEST_CASE("degenerate regressions are rejected") {
    std::vector<double> xs = {1, 2, 3};
    std::vector<double> short_ys = {1, 2};
    CHECK_THROWS_WITH(loglog_fit(xs, short_ys), "mismatched fit inputs");

    std::vector<double> two = {1, 2};
    CHECK_THROWS_WITH(loglog_fit(two, two), "log-log fit needs at least three points");

    std::vector<double> with_zero = {1, 0, 3};
    std::vector<double> ys = {1, 2, 3};
    CHECK_THROWS_WITH(loglog_fit(with_zero, ys), "log-log fit requires positive values");
    CHECK_THROWS_WITH(loglog_fit(ys, with_zero), "log-log fit requires positive values");
    std::vector<double> with_negative = {1, 2, -3};
    CHECK_THROWS_WITH(loglog_fit(ys, with_negative), "log-log fit requires positive values");

    std::vector<double> same_x = {5, 5, 5};
    CHECK_THROWS_WITH(loglog_fit(same_x, ys), "degenerate regression");
}
