#include "mechdetect/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "json.hpp"
#include "mechdetect/error.hpp"
#include "mechdetect/random.hpp"
#include "mechdetect/simd/kernels.hpp"

namespace mechdetect {
namespace {

constexpr std::size_t kHistSize = 256;
constexpr double kMinHessianToSplit = 1e-3;
// Smoothing added to the hessian when ordering categories by gradient ratio.
constexpr double kCategorySmoothing = 10.0;

using simd::HistogramBin;

struct SplitInfo {
    double gain = 0.0;
    std::uint32_t feature = 0;
    bool categorical = false;
    std::uint8_t bin_threshold = 0;
    std::bitset<kHistSize> left_bins;
    bool missing_left = false;
    std::uint32_t left_count = 0;
    std::uint32_t right_count = 0;
};

struct Totals {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t count = 0;
};

double midpoint(double a, double b) { return a + (b - a) / 2.0; }

// Percentile by the "midpoint" rule: mean of the two order statistics that
// bracket position q (n - 1).
double percentile_midpoint(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return midpoint(sorted[lo], sorted[hi]);
}

bool goes_left(const TreeNode& node, std::uint8_t bin) {
    if (node.categorical) return node.left_bins.test(bin);
    if (bin == kMissingBin) return node.missing_left;
    return bin <= node.bin_threshold;
}

double leaf_objective(double g, double h, double l2) { return g * g / (h + l2); }

class TreeGrower {
public:
    TreeGrower(const std::vector<std::vector<std::uint8_t>>& bins,
               const std::vector<FeatureBinning>& binning, const GbdtParams& params,
               std::span<const double> grad, std::span<const double> hess)
        : bins_(bins), binning_(binning), params_(params), grad_(grad), hess_(hess) {}

    // Grows one tree best-first and returns it with leaf row ranges so the
    // caller can update the training scores.
    RegressionTree grow(std::vector<std::uint32_t>& rows,
                        std::vector<std::pair<std::size_t, std::size_t>>& leaf_ranges,
                        std::vector<double>& leaf_values) {
        RegressionTree tree;
        std::vector<Pending> open;

        Pending root;
        root.node = 0;
        root.begin = 0;
        root.end = rows.size();
        root.hist = build_hist(std::span(rows));
        root.totals = totals_of(root.hist);
        tree.nodes.push_back(TreeNode{});
        tree.nodes[0].count = root.totals.count;
        root.split = find_split(root.hist, root.totals);
        open.push_back(std::move(root));

        std::size_t n_leaves = 1;
        while (n_leaves < params_.max_leaves) {
            // Largest gain first; ties resolve to the earliest node.
            auto best = open.end();
            for (auto it = open.begin(); it != open.end(); ++it) {
                if (!it->split) continue;
                if (best == open.end() || it->split->gain > best->split->gain) best = it;
            }
            if (best == open.end()) break;

            Pending parent = std::move(*best);
            open.erase(best);
            const SplitInfo& s = *parent.split;

            const std::size_t mid = partition(rows, parent.begin, parent.end, s);
            TreeNode& node = tree.nodes[parent.node];
            node.feature = s.feature;
            node.categorical = s.categorical;
            node.bin_threshold = s.bin_threshold;
            node.left_bins = s.left_bins;
            node.missing_left = s.missing_left;
            node.gain = s.gain;
            node.left = static_cast<std::int32_t>(tree.nodes.size());
            node.right = node.left + 1;

            Pending left, right;
            left.node = static_cast<std::size_t>(node.left);
            left.begin = parent.begin;
            left.end = mid;
            right.node = static_cast<std::size_t>(node.right);
            right.begin = mid;
            right.end = parent.end;
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});

            // Histogram subtraction: build the smaller child, derive the other.
            Pending& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
            Pending& large = &small == &left ? right : left;
            small.hist = build_hist(std::span(rows).subspan(small.begin, small.end - small.begin));
            large.hist = std::move(parent.hist);
            for_used_bins([&](std::size_t i) {
                large.hist[i].sum_gradients -= small.hist[i].sum_gradients;
                large.hist[i].sum_hessians -= small.hist[i].sum_hessians;
                large.hist[i].count -= small.hist[i].count;
            });
            for (Pending* child : {&left, &right}) {
                child->totals = totals_of(child->hist);
                tree.nodes[child->node].count = child->totals.count;
                child->split = find_split(child->hist, child->totals);
            }
            open.push_back(std::move(left));
            open.push_back(std::move(right));
            ++n_leaves;
        }
        for (auto& leaf : open) pool_.push_back(std::move(leaf.hist));

        for (const auto& leaf : open) {
            const double value = -params_.learning_rate * leaf.totals.g /
                                 (leaf.totals.h + params_.l2_regularization);
            tree.nodes[leaf.node].value = std::isfinite(value) ? value : 0.0;
            leaf_ranges.emplace_back(leaf.begin, leaf.end);
            leaf_values.push_back(tree.nodes[leaf.node].value);
        }
        return tree;
    }

private:
    struct Pending {
        std::size_t node = 0;
        std::size_t begin = 0;
        std::size_t end = 0;
        std::vector<HistogramBin> hist; // n_features * kHistSize
        Totals totals;
        std::optional<SplitInfo> split;
    };

    // Visits the histogram slots that can be non-zero: each feature's value
    // bins and its missing bin.
    template <typename Fn>
    void for_used_bins(Fn&& fn) const {
        for (std::size_t f = 0; f < binning_.size(); ++f) {
            const std::size_t base = f * kHistSize;
            for (std::size_t b = 0; b < binning_[f].n_bins; ++b) fn(base + b);
            fn(base + kMissingBin);
        }
    }

    std::vector<HistogramBin> build_hist(std::span<const std::uint32_t> rows) {
        std::vector<HistogramBin> hist;
        if (pool_.empty()) {
            hist.resize(binning_.size() * kHistSize);
        } else {
            hist = std::move(pool_.back());
            pool_.pop_back();
            for_used_bins([&](std::size_t i) { hist[i] = HistogramBin{}; });
        }
        for (std::size_t f = 0; f < binning_.size(); ++f)
            simd::build_histogram(bins_[f], rows, grad_, hess_,
                                  std::span(hist).subspan(f * kHistSize, kHistSize));
        return hist;
    }

    Totals totals_of(const std::vector<HistogramBin>& hist) const {
        // Every feature's histogram sums to the node totals; feature 0 is enough.
        Totals t;
        for (std::size_t b = 0; b < kHistSize; ++b) {
            t.g += hist[b].sum_gradients;
            t.h += hist[b].sum_hessians;
            t.count += hist[b].count;
        }
        return t;
    }

    bool admissible(double hl, std::uint32_t cl, double hr, std::uint32_t cr) const {
        return cl >= params_.min_samples_leaf && cr >= params_.min_samples_leaf &&
               hl >= kMinHessianToSplit && hr >= kMinHessianToSplit;
    }

    double gain(double gl, double hl, double gr, double hr, const Totals& t) const {
        const double l2 = params_.l2_regularization;
        return leaf_objective(gl, hl, l2) + leaf_objective(gr, hr, l2) - leaf_objective(t.g, t.h, l2);
    }

    std::optional<SplitInfo> find_split(const std::vector<HistogramBin>& hist,
                                        const Totals& t) const {
        std::optional<SplitInfo> best;
        if (t.count < 2 * params_.min_samples_leaf) return best;
        auto consider = [&](double g, const SplitInfo& candidate) {
            if (g > 0.0 && (!best || g > best->gain)) {
                best = candidate;
                best->gain = g;
            }
        };
        for (std::size_t f = 0; f < binning_.size(); ++f) {
            const HistogramBin* h = hist.data() + f * kHistSize;
            if (binning_[f].kind == ColumnKind::Numeric)
                scan_numeric(f, h, t, consider);
            else
                scan_categorical(f, h, t, consider);
        }
        return best;
    }

    template <typename Consider>
    void scan_numeric(std::size_t f, const HistogramBin* h, const Totals& t, Consider&& consider) const {
        const std::size_t nb = binning_[f].n_bins;
        const HistogramBin& missing = h[kMissingBin];
        const double l2 = params_.l2_regularization;
        const double parent = leaf_objective(t.g, t.h, l2);
        const std::uint32_t min_leaf = static_cast<std::uint32_t>(params_.min_samples_leaf);

        // One direction of the scan; empty bins repeat the previous candidate
        // and are skipped.
        auto scan = [&](double gl, double hl, std::uint32_t cl, std::size_t last, bool missing_left) {
            double best_gain = 0.0;
            std::size_t best_bin = 0;
            std::uint32_t best_cl = 0;
            for (std::size_t b = 0; b < last; ++b) {
                if (h[b].count == 0) continue;
                gl += h[b].sum_gradients;
                hl += h[b].sum_hessians;
                cl += h[b].count;
                if (cl < min_leaf || hl < kMinHessianToSplit) continue;
                const std::uint32_t cr = t.count - cl;
                const double hr = t.h - hl;
                if (cr < min_leaf) break;
                if (hr < kMinHessianToSplit) continue;
                const double g = leaf_objective(gl, hl, l2) + leaf_objective(t.g - gl, hr, l2) - parent;
                if (g > best_gain) {
                    best_gain = g;
                    best_bin = b;
                    best_cl = cl;
                }
            }
            if (best_gain <= 0.0) return;
            SplitInfo cand;
            cand.feature = static_cast<std::uint32_t>(f);
            cand.bin_threshold = static_cast<std::uint8_t>(best_bin);
            cand.left_count = best_cl;
            cand.right_count = t.count - best_cl;
            // Without missing values in the node, unseen nulls follow the
            // larger child.
            cand.missing_left = missing_left || (missing.count == 0 && best_cl > cand.right_count);
            consider(best_gain, cand);
        };

        // Missing values to the right. Without missing values the last bin
        // cannot be a threshold.
        scan(0.0, 0.0, 0, missing.count == 0 ? nb - 1 : nb, false);
        // Missing values to the left.
        if (missing.count > 0) scan(missing.sum_gradients, missing.sum_hessians, missing.count, nb - 1, true);
    }

    template <typename Consider>
    void scan_categorical(std::size_t f, const HistogramBin* h, const Totals& t,
                          Consider&& consider) const {
        const std::size_t nb = binning_[f].n_bins;
        std::vector<std::size_t> cats;
        for (std::size_t b = 0; b < nb; ++b)
            if (h[b].count > 0) cats.push_back(b);
        const bool has_missing = h[kMissingBin].count > 0;
        if (has_missing) cats.push_back(kMissingBin);
        if (cats.size() < 2) return;

        auto ratio = [&](std::size_t b) {
            return h[b].sum_gradients / (h[b].sum_hessians + kCategorySmoothing);
        };
        std::stable_sort(cats.begin(), cats.end(),
                         [&](std::size_t a, std::size_t b) { return ratio(a) < ratio(b); });

        SplitInfo cand;
        cand.feature = static_cast<std::uint32_t>(f);
        cand.categorical = true;
        double gl = 0.0, hl = 0.0;
        std::uint32_t cl = 0;
        std::bitset<kHistSize> left;
        for (std::size_t k = 0; k + 1 < cats.size(); ++k) {
            const std::size_t b = cats[k];
            gl += h[b].sum_gradients;
            hl += h[b].sum_hessians;
            cl += h[b].count;
            left.set(b);
            const std::uint32_t cr = t.count - cl;
            const double hr = t.h - hl;
            if (!admissible(hl, cl, hr, cr)) continue;
            cand.left_bins = left;
            cand.left_count = cl;
            cand.right_count = cr;
            if (has_missing) {
                cand.missing_left = left.test(kMissingBin);
            } else {
                cand.missing_left = cl > cr;
                cand.left_bins.set(kMissingBin, cand.missing_left);
            }
            consider(gain(gl, hl, t.g - gl, hr, t), cand);
        }
    }

    // Stable partition of rows[begin, end) by the split; returns the boundary.
    std::size_t partition(std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end,
                          const SplitInfo& s) const {
        TreeNode probe;
        probe.categorical = s.categorical;
        probe.bin_threshold = s.bin_threshold;
        probe.left_bins = s.left_bins;
        probe.missing_left = s.missing_left;
        const auto& col = bins_[s.feature];
        scratch_.clear();
        std::size_t write = begin;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = rows[i];
            if (goes_left(probe, col[r])) rows[write++] = r;
            else scratch_.push_back(r);
        }
        std::copy(scratch_.begin(), scratch_.end(), rows.begin() + static_cast<std::ptrdiff_t>(write));
        return write;
    }

    const std::vector<std::vector<std::uint8_t>>& bins_;
    const std::vector<FeatureBinning>& binning_;
    const GbdtParams& params_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    mutable std::vector<std::uint32_t> scratch_;
    std::vector<std::vector<HistogramBin>> pool_;
};

void check_schema(const std::vector<FeatureBinning>& binning, const Table& data) {
    if (data.n_cols() != binning.size())
        throw InvalidArgument("schema mismatch: model has " + std::to_string(binning.size()) +
                              " features, data has " + std::to_string(data.n_cols()) + " columns");
    for (std::size_t f = 0; f < binning.size(); ++f) {
        const Column& c = data.column(f);
        if (c.name() != binning[f].name || c.kind() != binning[f].kind)
            throw InvalidArgument("schema mismatch at column " + std::to_string(f) + ": expected " +
                                  std::string(to_string(binning[f].kind)) + " '" + binning[f].name +
                                  "', got " + std::string(to_string(c.kind())) + " '" + c.name() + "'");
    }
}

} // namespace

void GbdtParams::validate() const {
    if (n_iterations < 1) throw InvalidArgument("n_iterations must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("learning_rate must be > 0");
    if (max_leaves < 2) throw InvalidArgument("max_leaves must be >= 2");
    if (max_bins < 2 || max_bins > 255) throw InvalidArgument("max_bins must lie in [2, 255]");
    if (!(l2_regularization >= 0.0)) throw InvalidArgument("l2_regularization must be >= 0");
    if (min_samples_leaf < 1) throw InvalidArgument("min_samples_leaf must be >= 1");
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

FeatureBinning learn_binning(const Column& column, std::size_t max_bins, std::uint64_t seed) {
    FeatureBinning fb;
    fb.name = column.name();
    fb.kind = column.kind();

    if (column.is_categorical()) {
        const auto dict = column.dictionary();
        std::vector<std::size_t> freq(dict.size(), 0);
        for (std::size_t i = 0; i < column.size(); ++i)
            if (!column.is_null(i)) ++freq[column.code(i)];
        std::vector<std::uint32_t> present;
        for (std::uint32_t c = 0; c < dict.size(); ++c)
            if (freq[c] > 0) present.push_back(c);
        if (present.size() > max_bins) {
            // Keep the most frequent categories; the rest share the missing bin.
            std::stable_sort(present.begin(), present.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return freq[a] > freq[b]; });
            present.resize(max_bins);
            std::sort(present.begin(), present.end());
        }
        for (auto c : present) fb.categories.push_back(dict[c]);
        fb.n_bins = std::max<std::size_t>(fb.categories.size(), 1);
        return fb;
    }

    std::vector<double> values;
    values.reserve(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
        if (!column.is_null(i)) values.push_back(column.number(i));
    if (values.size() > kBinningSubsample) {
        Rng rng(seed);
        for (std::size_t i = 0; i < kBinningSubsample; ++i) {
            const auto k = i + static_cast<std::size_t>(rng.uniform_index(values.size() - i));
            std::swap(values[i], values[k]);
        }
        values.resize(kBinningSubsample);
    }
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    if (distinct.size() <= max_bins) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            fb.thresholds.push_back(midpoint(distinct[i], distinct[i + 1]));
    } else {
        for (std::size_t k = 1; k < max_bins; ++k) {
            const double q = static_cast<double>(k) / static_cast<double>(max_bins);
            const double t = percentile_midpoint(values, q);
            if (fb.thresholds.empty() || t > fb.thresholds.back()) fb.thresholds.push_back(t);
        }
    }
    fb.n_bins = fb.thresholds.size() + 1;
    return fb;
}

std::vector<std::uint8_t> apply_binning(const FeatureBinning& binning, const Column& column) {
    std::vector<std::uint8_t> out(column.size(), static_cast<std::uint8_t>(kMissingBin));
    if (binning.kind == ColumnKind::Numeric) {
        for (std::size_t i = 0; i < column.size(); ++i) {
            if (column.is_null(i)) continue;
            const auto it = std::lower_bound(binning.thresholds.begin(), binning.thresholds.end(),
                                             column.number(i));
            out[i] = static_cast<std::uint8_t>(it - binning.thresholds.begin());
        }
        return out;
    }
    // Map this column's dictionary onto the learned category bins by name.
    std::unordered_map<std::string_view, std::uint8_t> bin_of;
    for (std::size_t b = 0; b < binning.categories.size(); ++b)
        bin_of.emplace(binning.categories[b], static_cast<std::uint8_t>(b));
    const auto dict = column.dictionary();
    std::vector<std::uint8_t> code_bin(dict.size(), static_cast<std::uint8_t>(kMissingBin));
    for (std::size_t c = 0; c < dict.size(); ++c)
        if (auto it = bin_of.find(dict[c]); it != bin_of.end()) code_bin[c] = it->second;
    for (std::size_t i = 0; i < column.size(); ++i)
        if (!column.is_null(i)) out[i] = code_bin[column.code(i)];
    return out;
}

TrainedModel fit(const Table& train, const MaskColumn& target, const GbdtParams& params) {
    params.validate();
    const std::size_t n = train.n_rows();
    if (n == 0) throw InvalidArgument("cannot fit on an empty table");
    if (target.size() != n)
        throw InvalidArgument("target has " + std::to_string(target.size()) + " entries, table has " +
                              std::to_string(n) + " rows");
    if (n >= (std::size_t{1} << 31)) throw InvalidArgument("too many rows");
    const std::size_t positives = target.error_count();
    if (positives == 0 || positives == n)
        throw UnsuitableData("target contains a single class");

    TrainedModel model;
    std::vector<std::vector<std::uint8_t>> bins;
    bins.reserve(train.n_cols());
    for (std::size_t f = 0; f < train.n_cols(); ++f) {
        model.binning_.push_back(
            learn_binning(train.column(f), params.max_bins, derive_seed(params.seed, f)));
        bins.push_back(apply_binning(model.binning_.back(), train.column(f)));
    }

    const double base_rate = static_cast<double>(positives) / static_cast<double>(n);
    model.initial_score_ = std::log(base_rate / (1.0 - base_rate));

    std::vector<double> raw(n, model.initial_score_);
    std::vector<double> grad(n), hess(n);
    const std::span<const std::uint8_t> labels(target.bits);
    model.training_loss_.push_back(simd::logistic_loss(raw, labels) / static_cast<double>(n));

    TreeGrower grower(bins, model.binning_, params, grad, hess);
    std::vector<std::uint32_t> rows(n);
    std::vector<std::pair<std::size_t, std::size_t>> leaf_ranges;
    std::vector<double> leaf_values;
    for (std::size_t it = 0; it < params.n_iterations; ++it) {
        simd::logistic_gradients(raw, labels, grad, hess);
        std::iota(rows.begin(), rows.end(), 0u);
        leaf_ranges.clear();
        leaf_values.clear();
        model.trees_.push_back(grower.grow(rows, leaf_ranges, leaf_values));
        for (std::size_t l = 0; l < leaf_ranges.size(); ++l)
            for (std::size_t i = leaf_ranges[l].first; i < leaf_ranges[l].second; ++i)
                raw[rows[i]] += leaf_values[l];
        model.training_loss_.push_back(simd::logistic_loss(raw, labels) / static_cast<double>(n));
    }
    return model;
}

std::vector<double> TrainedModel::predict_scores(const Table& data) const {
    check_schema(binning_, data);
    std::vector<std::vector<std::uint8_t>> bins;
    bins.reserve(binning_.size());
    for (std::size_t f = 0; f < binning_.size(); ++f)
        bins.push_back(apply_binning(binning_[f], data.column(f)));

    std::vector<double> scores(data.n_rows(), initial_score_);
    for (const auto& tree : trees_) {
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
            const TreeNode* node = &tree.nodes[0];
            while (!node->is_leaf()) {
                const bool left = goes_left(*node, bins[node->feature][i]);
                node = &tree.nodes[static_cast<std::size_t>(left ? node->left : node->right)];
            }
            scores[i] += node->value;
        }
    }
    return scores;
}

std::vector<double> TrainedModel::predict_proba(const Table& data) const {
    auto scores = predict_scores(data);
    for (auto& s : scores) s = 1.0 / (1.0 + std::exp(-s));
    return scores;
}

std::string TrainedModel::dump_json() const {
    nlohmann::json j;
    j["initial_score"] = initial_score_;
    auto& features = j["features"] = nlohmann::json::array();
    for (const auto& b : binning_) {
        nlohmann::json f{{"name", b.name}, {"kind", std::string(to_string(b.kind))}, {"n_bins", b.n_bins}};
        if (b.kind == ColumnKind::Numeric) f["thresholds"] = b.thresholds;
        else f["categories"] = b.categories;
        features.push_back(std::move(f));
    }
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& t : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) {
                nodes.push_back({{"leaf", n.value}, {"count", n.count}});
                continue;
            }
            nlohmann::json node{{"feature", n.feature}, {"left", n.left}, {"right", n.right},
                                {"missing_left", n.missing_left}, {"gain", n.gain}, {"count", n.count}};
            if (n.categorical) {
                std::vector<std::size_t> left;
                for (std::size_t b = 0; b < kHistSize; ++b)
                    if (n.left_bins.test(b)) left.push_back(b);
                node["left_bins"] = left;
            } else {
                node["bin_threshold"] = n.bin_threshold;
            }
            nodes.push_back(std::move(node));
        }
        trees.push_back(std::move(nodes));
    }
    return j.dump(2);
}

} // namespace mechdetect
