#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>

namespace epiwarn {

// Season-over-season change of a count: (now - prior) / prior. A count that
// appears where there was nothing before has no finite ratio; it reports as
// "new". Two empty seasons have not changed.
struct RelativeVariation {
    bool fresh = false;  // prior was zero and the current count is positive
    double value = 0.0;  // meaningful only when !fresh
};

inline RelativeVariation relative_variation(std::int64_t prior, std::int64_t now) {
    if (prior < 0 || now < 0) throw std::invalid_argument("negative count");
    if (prior == 0) {
        if (now == 0) return {false, 0.0};
        return {true, 0.0};
    }
    return {false, double(now - prior) / double(prior)};
}

inline std::string format_variation(const RelativeVariation& rv, int decimals = 2) {
    if (rv.fresh) return "new";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, rv.value);
    return buf;
}

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares of log(y) on log(x). Both inputs must be strictly
// positive and the x values must not all coincide.
inline RegressionFit loglog_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("mismatched fit inputs");
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("log-log fit needs at least three points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0)
            throw std::invalid_argument("log-log fit requires positive values");
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(xs[i]) - mx;
        const double dy = std::log(ys[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("degenerate regression");
    RegressionFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = std::log(ys[i]) - (fit.intercept + fit.slope * std::log(xs[i]));
        ss_res += resid * resid;
    }
    fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return fit;
}

}  // namespace epiwarn
