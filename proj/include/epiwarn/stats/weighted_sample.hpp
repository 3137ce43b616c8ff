#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace epiwarn {

// An empirical sample with integer-valued observations given as
// (value, multiplicity) pairs: the window's tweet counts viewed as a
// distribution over day offsets, or (in day-count mode) the daily counts
// themselves. Support is strictly increasing, weights nonnegative.
struct WeightedSample {
    std::vector<int> support;
    std::vector<std::int64_t> weights;

    std::int64_t total() const {
        std::int64_t n = 0;
        for (auto w : weights) n += w;
        return n;
    }

    // Counts over consecutive offsets 0..len-1.
    static WeightedSample from_counts(std::span<const std::int64_t> counts) {
        WeightedSample s;
        s.support.reserve(counts.size());
        s.weights.reserve(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) {
            s.support.push_back(static_cast<int>(i));
            s.weights.push_back(counts[i]);
        }
        return s;
    }

    // The multiset of the values themselves (one observation per entry).
    static WeightedSample from_values(std::vector<int> values);

    void validate() const {
        if (support.size() != weights.size())
            throw std::invalid_argument("weighted sample: support/weights length mismatch");
        for (std::size_t i = 1; i < support.size(); ++i)
            if (support[i] <= support[i - 1])
                throw std::invalid_argument("weighted sample: support not strictly increasing");
        for (auto w : weights)
            if (w < 0) throw std::invalid_argument("weighted sample: negative weight");
    }
};

inline WeightedSample WeightedSample::from_values(std::vector<int> values) {
    std::sort(values.begin(), values.end());
    WeightedSample s;
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        s.support.push_back(values[i]);
        s.weights.push_back(static_cast<std::int64_t>(j - i));
        i = j;
    }
    return s;
}

enum class TestMethod { ks, ad };

struct TestResult {
    double statistic = 0.0;  // K-S: D in [0,1]; A-D: standardized T, may be negative
    double p_value = 1.0;    // in (0, 1]
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;
    TestMethod method = TestMethod::ks;
};

// Merge two supports into the union, with per-sample weights aligned
// (zero where a sample has no mass).
struct MergedSamples {
    std::vector<int> support;
    std::vector<std::int64_t> wa;
    std::vector<std::int64_t> wb;
};

inline MergedSamples merge_supports(const WeightedSample& a, const WeightedSample& b) {
    MergedSamples m;
    std::size_t i = 0, j = 0;
    while (i < a.support.size() || j < b.support.size()) {
        int va = i < a.support.size() ? a.support[i] : 0;
        int vb = j < b.support.size() ? b.support[j] : 0;
        if (j >= b.support.size() || (i < a.support.size() && va < vb)) {
            m.support.push_back(va);
            m.wa.push_back(a.weights[i]);
            m.wb.push_back(0);
            ++i;
        } else if (i >= a.support.size() || vb < va) {
            m.support.push_back(vb);
            m.wa.push_back(0);
            m.wb.push_back(b.weights[j]);
            ++j;
        } else {
            m.support.push_back(va);
            m.wa.push_back(a.weights[i]);
            m.wb.push_back(b.weights[j]);
            ++i;
            ++j;
        }
    }
    return m;
}

}  // namespace epiwarn
