#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mechdetect/gbdt.hpp"
#include "mechdetect/mask.hpp"
#include "mechdetect/perturb.hpp"
#include "mechdetect/stats.hpp"
#include "mechdetect/table.hpp"

namespace mechdetect {

/// Which table the classifiers learn from: the clean data or the perturbed
/// data, where the missingness itself is visible.
enum class TrainSource { Clean, Perturbed };

std::string_view to_string(TrainSource s);
TrainSource parse_train_source(std::string_view text);

struct TaskSpec {
    LearningTask task = LearningTask::Complete;
    TrainSource train_source = TrainSource::Clean;
    std::size_t target_column = 0;
    /// Seed of the target permutation; Shuffled only.
    std::uint64_t shuffle_seed = 0;
};

struct TaskData {
    Table train;
    MaskColumn target;
};

// Complete: (source, E[:, j]). Shuffled: (source, seeded permutation of
// E[:, j]). Excluded: (source without column j, E[:, j]). Throws
// UnsuitableData when the mask column is all zeros or all ones.
TaskData build_task(const Table& clean, const Table& perturbed, const ErrorMask& mask,
                    const TaskSpec& spec);

/// Seeded uniform permutation of the bits; the error count is preserved.
MaskColumn shuffle_mask_column(const MaskColumn& column, std::uint64_t seed);

struct CvConfig {
    std::size_t n_folds = 10;
    bool stratified = true;
    std::uint64_t seed = 0;

    void validate() const;
};

// Fold index of every row. Stratified assignment shuffles each class with
// the seed and deals its rows round-robin over the folds (positives first,
// negatives continuing where positives stopped), so fold sizes differ by at
// most one and each class is spread as evenly as possible.
std::vector<std::uint32_t> assign_folds(const MaskColumn& target, std::size_t n_folds,
                                        bool stratified, std::uint64_t seed);

/// Number of folds actually used: n_folds, or the minority-class count when
/// that is smaller. Throws UnsuitableData below 2.
std::size_t effective_folds(const MaskColumn& target, std::size_t n_folds);

// Fits on k-1 folds, scores the held-out fold, and returns the k held-out
// AUC-ROC values in fold order.
AucSamples cross_validated_auc(const Table& train, const MaskColumn& target, const CvConfig& cv,
                               const GbdtParams& params,
                               LearningTask task = LearningTask::Complete);

struct DetectionConfig {
    double alpha = 0.05;
    TrainSource train_source = TrainSource::Clean;
    CvConfig cv;
    GbdtParams gbdt;
    std::uint64_t shuffle_seed = 0;
    /// Inputs with fewer rows are rejected.
    std::size_t min_rows = 40;
};

struct DetectionResult {
    Mechanism mechanism = Mechanism::MCAR;
    double p1 = 1.0;
    /// Reported p2; empty for an MCAR verdict.
    std::optional<double> p2;
    /// p2 as computed; both tests always run.
    double p2_computed = 1.0;
    double alpha = 0.05;
    AucSamples complete;
    AucSamples shuffled;
    AucSamples excluded;
    TrainSource train_source = TrainSource::Clean;
    std::size_t column = 0;
    std::string column_name;
    std::size_t n_folds = 0;
    std::uint64_t cv_seed = 0;
    std::uint64_t shuffle_seed = 0;
    std::uint64_t gbdt_seed = 0;
};

/// Derives the CV, permutation and learner seeds from one run seed. The CLI
/// and the benchmark both go through this, so a benchmark cell can be
/// reproduced with `detect --seed <cell seed>`.
void apply_run_seed(DetectionConfig& config, std::uint64_t seed);

/// Two-step decision at threshold alpha / 2.
Mechanism decide_mechanism(double p1, double p2, double alpha);

// Runs Complete, Shuffled and Excluded with identical CV and model settings,
// then p1 = MWU(Complete > Shuffled), p2 = MWU(Complete > Excluded). Throws
// UnsuitableData when the input fails the size gate (rows < min_rows, fewer
// than two columns, minority class smaller than the fold count).
DetectionResult detect_mechanism(const Table& clean, const Table& perturbed, const ErrorMask& mask,
                                 std::size_t j, const DetectionConfig& config);

/// Fraction of (verdict, truth) pairs that agree. Throws on an empty list.
double detection_accuracy(std::span<const std::pair<Mechanism, Mechanism>> verdict_truth);

} // namespace mechdetect
