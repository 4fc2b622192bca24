#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mechdetect/mask.hpp"
#include "mechdetect/table.hpp"

namespace mechdetect {

// Hyperparameters of the histogram gradient-boosting classifier. The
// defaults follow the usual histogram-GBDT settings (100 rounds, shrinkage
// 0.1, 31 leaves, 20 samples per leaf, 255 bins, no L2).
struct GbdtParams {
    std::size_t n_iterations = 100;
    double learning_rate = 0.1;
    std::size_t max_leaves = 31;
    std::size_t min_samples_leaf = 20;
    std::size_t max_bins = 255;
    double l2_regularization = 0.0;
    /// Only consulted when a feature has more present values than the
    /// binning subsample size.
    std::uint64_t seed = 0;

    void validate() const;
};

/// Bin index reserved for missing (and unseen categorical) values.
inline constexpr std::size_t kMissingBin = 255;
/// Number of present values sampled to place quantile bin edges.
inline constexpr std::size_t kBinningSubsample = 200000;

// How one feature maps onto bins [0, n_bins) plus kMissingBin.
// Numeric: value x lands in bin #{t in thresholds : t < x}.
// Categorical: categories[b] is the category held by bin b.
struct FeatureBinning {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::size_t n_bins = 1;
    std::vector<double> thresholds;
    std::vector<std::string> categories;
};

struct TreeNode {
    // Children; -1 on leaves.
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t feature = 0;
    bool categorical = false;
    // Numeric splits send bin <= bin_threshold left.
    std::uint8_t bin_threshold = 0;
    // Categorical splits send bins in left_bins left.
    std::bitset<256> left_bins;
    // Direction taken by nulls and unseen categories.
    bool missing_left = false;
    // Shrunk additive log-odds on leaves.
    double value = 0.0;
    double gain = 0.0;
    std::uint32_t count = 0;

    bool is_leaf() const noexcept { return left < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    std::size_t leaf_count() const;
};

class TrainedModel {
public:
    double initial_score() const noexcept { return initial_score_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    const std::vector<FeatureBinning>& binning() const noexcept { return binning_; }
    /// Mean training log-loss before the first tree and after each tree.
    const std::vector<double>& training_loss() const noexcept { return training_loss_; }

    /// Raw log-odds per row. The table must have the training schema
    /// (same column names and kinds, same order).
    std::vector<double> predict_scores(const Table& data) const;
    /// Logistic of predict_scores.
    std::vector<double> predict_proba(const Table& data) const;

    /// Debug dump; not a stable format.
    std::string dump_json() const;

private:
    friend TrainedModel fit(const Table&, const MaskColumn&, const GbdtParams&);

    double initial_score_ = 0.0;
    std::vector<RegressionTree> trees_;
    std::vector<FeatureBinning> binning_;
    std::vector<double> training_loss_;
};

/// Gradient boosting on the logistic loss. Throws InvalidArgument for an
/// empty table or a target whose length does not match, UnsuitableData for
/// a single-class target.
TrainedModel fit(const Table& train, const MaskColumn& target, const GbdtParams& params);

inline std::vector<double> predict_scores(const TrainedModel& model, const Table& data) {
    return model.predict_scores(data);
}

/// Learns bin edges / category bins for one column from its present values.
FeatureBinning learn_binning(const Column& column, std::size_t max_bins, std::uint64_t seed);

/// Bin index of every row under `binning` (kMissingBin for nulls/unseen).
std::vector<std::uint8_t> apply_binning(const FeatureBinning& binning, const Column& column);

} // namespace mechdetect
