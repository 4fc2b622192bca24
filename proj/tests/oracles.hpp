#pragma once

// Brute-force reference implementations used only by the tests.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mechdetect::oracle {

/// AUC by counting every (positive, negative) pair; ties count 1/2.
inline double auc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    double concordant = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            if (labels[k]) continue;
            ++pairs;
            if (scores[i] > scores[k]) concordant += 1.0;
            else if (scores[i] == scores[k]) concordant += 0.5;
        }
    }
    return concordant / static_cast<double>(pairs);
}

/// U of the first sample by pair counting; ties count 1/2.
inline double u_pairs(std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (double x : a)
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    return u;
}

struct EnumeratedTail {
    std::uint64_t at_least = 0; // assignments with U >= observed
    std::uint64_t total = 0;
};

// Enumerates every way of choosing which n1 of the pooled values form the
// first sample and counts the assignments whose U is at least the observed
// one. Exact null distribution of U for tie-free data.
inline EnumeratedTail mwu_enumerate(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    const std::size_t n1 = a.size();
    const double observed = u_pairs(a, b);

    EnumeratedTail out;
    std::vector<double> first, second;
    for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << n); ++subset) {
        if (static_cast<std::size_t>(__builtin_popcountll(subset)) != n1) continue;
        first.clear();
        second.clear();
        for (std::size_t i = 0; i < n; ++i)
            ((subset >> i) & 1 ? first : second).push_back(pooled[i]);
        ++out.total;
        if (u_pairs(first, second) >= observed) ++out.at_least;
    }
    return out;
}

inline double mwu_enumerate_p(std::span<const double> a, std::span<const double> b) {
    const auto t = mwu_enumerate(a, b);
    return static_cast<double>(t.at_least) / static_cast<double>(t.total);
}

} // namespace mechdetect::oracle
