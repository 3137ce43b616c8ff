#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "epiwarn/stats/weighted_sample.hpp"

namespace epiwarn {

// Critical values of the standardized k-sample Anderson-Darling statistic
// for k = 2 and the significance levels they correspond to. The p-value is
// interpolated log-linearly between these knots and clamped to the ends.
inline constexpr double kAdCriticalValues[7] = {0.325, 1.226, 1.961, 2.718, 3.752, 4.592, 6.546};
inline constexpr double kAdSignificance[7] = {0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001};
inline constexpr double kAdPvalueFloor = 0.001;
inline constexpr double kAdPvalueCeiling = 0.25;

// Piecewise log-linear interpolation of significance against the
// standardized statistic. Exact at the knots; clamped to [0.001, 0.25].
inline double ad_pvalue(double t) {
    if (t <= kAdCriticalValues[0]) return kAdPvalueCeiling;
    if (t >= kAdCriticalValues[6]) return kAdPvalueFloor;
    for (int i = 0; i < 6; ++i) {
        const double lo = kAdCriticalValues[i], hi = kAdCriticalValues[i + 1];
        if (t <= hi) {
            const double la = std::log(kAdSignificance[i]);
            const double lb = std::log(kAdSignificance[i + 1]);
            return std::exp(la + (t - lo) / (hi - lo) * (lb - la));
        }
    }
    return kAdPvalueFloor;  // unreachable
}

namespace detail {

// Midrank-corrected two-sample Anderson-Darling rank statistic A2akN over a
// merged weighted support: each support value contributes its pooled tie
// block. Requires at least two distinct pooled values (checked by caller).
inline double ad_rank_statistic(const MergedSamples& m, std::int64_t n1, std::int64_t n2) {
    const double nn = double(n1 + n2);
    std::int64_t before = 0;  // pooled units strictly below the current value
    std::int64_t cum1 = 0, cum2 = 0;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < m.support.size(); ++k) {
        const std::int64_t lj = m.wa[k] + m.wb[k];
        if (lj == 0) continue;
        const double ljd = double(lj);
        const double bj = double(before) + ljd / 2.0;
        const double denom = bj * (nn - bj) - nn * ljd / 4.0;
        cum1 += m.wa[k];
        cum2 += m.wb[k];
        const double m1 = double(cum1) - double(m.wa[k]) / 2.0;
        const double m2 = double(cum2) - double(m.wb[k]) / 2.0;
        const double d1 = nn * m1 - bj * double(n1);
        const double d2 = nn * m2 - bj * double(n2);
        s1 += ljd / nn * (d1 * d1) / denom;
        s2 += ljd / nn * (d2 * d2) / denom;
        before += lj;
    }
    const double a2akn = s1 / double(n1) + s2 / double(n2);
    return a2akn * (nn - 1.0) / nn;
}

// Variance of A2akN under the null (k = 2 samples, N pooled units), from
// the exact finite-sample moments of the rank statistic.
inline double ad_null_variance(std::int64_t n1, std::int64_t n2) {
    const double k = 2.0;
    const double nn = double(n1 + n2);
    const std::int64_t n_i = n1 + n2;
    const double cap_h = 1.0 / double(n1) + 1.0 / double(n2);
    double h = 1.0;
    for (std::int64_t i = 2; i < n_i; ++i) h += 1.0 / double(i);
    // g = sum_{i<j over 1..N-1} 1 / ((N - i) * j), accumulated as a running
    // prefix of 1/(N-1) + 1/(N-2) + ... weighted by 1/j.
    double g = 0.0, cs = 0.0;
    for (std::int64_t j = 2; j < n_i; ++j) {
        cs += 1.0 / double(n_i - (j - 1));
        g += cs / double(j);
    }
    const double a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * cap_h;
    const double b = (2.0 * g - 4.0) * k * k + 8.0 * h * k +
                     (2.0 * g - 14.0 * h - 4.0) * cap_h - 8.0 * h + 4.0 * g - 6.0;
    const double c = (6.0 * h + 2.0 * g - 2.0) * k * k + (4.0 * h - 4.0 * g + 6.0) * k +
                     (2.0 * h - 6.0) * cap_h + 4.0 * h;
    const double d = (2.0 * h + 6.0) * k * k - 4.0 * h * k;
    return (a * nn * nn * nn + b * nn * nn + c * nn + d) /
           ((nn - 1.0) * (nn - 2.0) * (nn - 3.0));
}

}  // namespace detail

// Two-sample Anderson-Darling test on weighted integer samples. Reports the
// standardized statistic T = (A2akN - 1) / sigma and its interpolated
// p-value. Degenerate pools (all units on one value, or fewer than four
// pooled units) carry no distributional evidence: statistic 0, p-value at
// the interpolation ceiling.
inline TestResult ad_two_sample(const WeightedSample& a, const WeightedSample& b) {
    const std::int64_t n1 = a.total();
    const std::int64_t n2 = b.total();
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("empty window sample");
    TestResult r;
    r.method = TestMethod::ad;
    r.n1 = n1;
    r.n2 = n2;
    const MergedSamples m = merge_supports(a, b);
    std::size_t distinct = 0;
    for (std::size_t k = 0; k < m.support.size(); ++k)
        if (m.wa[k] + m.wb[k] > 0) ++distinct;
    if (distinct < 2 || n1 + n2 < 4) {
        r.statistic = 0.0;
        r.p_value = kAdPvalueCeiling;
        return r;
    }
    const double a2akn = detail::ad_rank_statistic(m, n1, n2);
    const double sigma = std::sqrt(detail::ad_null_variance(n1, n2));
    r.statistic = (a2akn - 1.0) / sigma;
    r.p_value = ad_pvalue(r.statistic);
    return r;
}

}  // namespace epiwarn
