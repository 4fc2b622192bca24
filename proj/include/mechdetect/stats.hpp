#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mechdetect {

enum class LearningTask { Complete, Shuffled, Excluded };

std::string_view to_string(LearningTask t);

/// Cross-validated AUC-ROC scores of one learning task, in fold order.
struct AucSamples {
    LearningTask task = LearningTask::Complete;
    std::vector<double> scores;
    /// Fold index of every row of the task's training table.
    std::vector<std::uint32_t> fold_of_row;

    double mean() const;
};

/// Probability that a random positive outscores a random negative, ties
/// counted 1/2, computed from midranks in O(n log n). Throws
/// InvalidArgument on length mismatch, NaN scores or single-class labels.
double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

enum class MwuMethod { Exact, NormalApprox };

std::string_view to_string(MwuMethod m);

struct MwuResult {
    /// U of the first sample: pairs (a_i > b_j) plus half the ties.
    double u_statistic = 0.0;
    double p_value = 1.0;
    MwuMethod method = MwuMethod::NormalApprox;
};

/// Largest per-sample size for which the exact null distribution is used.
inline constexpr std::size_t kMwuExactMaxSize = 12;

// One-sided Mann-Whitney U test of "a is stochastically larger than b".
// Exact null distribution when the pooled sample has no ties and both sizes
// are <= 12; otherwise the normal approximation with tie-corrected variance
// and a continuity correction. Zero variance (all values equal) gives p = 1.
MwuResult mwu_greater(std::span<const double> a, std::span<const double> b);
MwuResult mwu_greater(const AucSamples& a, const AucSamples& b);

/// Exact path only; requires tie-free input with sizes <= 12.
MwuResult mwu_greater_exact(std::span<const double> a, std::span<const double> b);
/// Normal-approximation path regardless of sizes or ties.
MwuResult mwu_greater_normal(std::span<const double> a, std::span<const double> b);

/// Number of arrangements of n1 + n2 distinct values in which the first
/// sample's U equals u, for u = 0 .. n1*n2.
std::vector<std::uint64_t> mwu_null_counts(std::size_t n1, std::size_t n2);

/// alpha / m.
double bonferroni_threshold(double alpha, std::size_t m);

/// Standard normal upper tail, P(Z > z).
double normal_sf(double z);

} // namespace mechdetect
