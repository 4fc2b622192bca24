#include "mechdetect/detect.hpp"

#include <algorithm>
#include <cctype>

#include "mechdetect/error.hpp"
#include "mechdetect/random.hpp"

namespace mechdetect {

std::string_view to_string(TrainSource s) { return s == TrainSource::Clean ? "clean" : "perturbed"; }

TrainSource parse_train_source(std::string_view text) {
    std::string s(text);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "clean") return TrainSource::Clean;
    if (s == "perturbed") return TrainSource::Perturbed;
    throw InvalidArgument("unknown train source '" + std::string(text) + "'");
}

MaskColumn shuffle_mask_column(const MaskColumn& column, std::uint64_t seed) {
    MaskColumn out = column;
    Rng rng(seed);
    rng.shuffle(std::span(out.bits));
    return out;
}

namespace {

void check_shapes(const Table& clean, const Table& perturbed, const ErrorMask& mask) {
    if (clean.n_rows() != perturbed.n_rows() || clean.n_cols() != perturbed.n_cols())
        throw InvalidArgument("clean and perturbed tables differ in shape");
    if (clean.column_names() != perturbed.column_names())
        throw InvalidArgument("clean and perturbed tables differ in column names");
    if (!mask.matches(clean))
        throw InvalidArgument("mask shape " + std::to_string(mask.rows()) + "x" +
                              std::to_string(mask.cols()) + " does not match the table");
}

} // namespace

TaskData build_task(const Table& clean, const Table& perturbed, const ErrorMask& mask,
                    const TaskSpec& spec) {
    check_shapes(clean, perturbed, mask);
    const std::size_t j = spec.target_column;
    if (j >= clean.n_cols()) throw InvalidArgument("target column index out of range");
    MaskColumn target = mask_column(mask, j);
    if (!target.has_both_classes())
        throw UnsuitableData("mask column '" + clean.column(j).name() +
                             "' is single-class; the detector needs errors and non-errors");

    const Table& source = spec.train_source == TrainSource::Clean ? clean : perturbed;
    switch (spec.task) {
    case LearningTask::Complete:
        return TaskData{source, std::move(target)};
    case LearningTask::Shuffled:
        return TaskData{source, shuffle_mask_column(target, spec.shuffle_seed)};
    case LearningTask::Excluded:
        return TaskData{drop_column(source, j), std::move(target)};
    }
    throw InvalidArgument("unknown learning task");
}

void CvConfig::validate() const {
    if (n_folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
}

std::vector<std::uint32_t> assign_folds(const MaskColumn& target, std::size_t n_folds,
                                        bool stratified, std::uint64_t seed) {
    if (n_folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    const std::size_t n = target.size();
    std::vector<std::uint32_t> fold(n, 0);
    std::size_t next = 0;
    auto deal = [&](std::vector<std::size_t> rows, std::uint64_t salt) {
        Rng rng(derive_seed(seed, salt));
        rng.shuffle(std::span(rows));
        for (std::size_t r : rows) {
            fold[r] = static_cast<std::uint32_t>(next % n_folds);
            ++next;
        }
    };
    if (!stratified) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        deal(std::move(all), 2);
        return fold;
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (target.bits[i] ? pos : neg).push_back(i);
    deal(std::move(pos), 1);
    deal(std::move(neg), 0);
    return fold;
}

std::size_t effective_folds(const MaskColumn& target, std::size_t n_folds) {
    const std::size_t positives = target.error_count();
    const std::size_t minority = std::min(positives, target.size() - positives);
    const std::size_t k = std::min(n_folds, minority);
    if (k < 2)
        throw UnsuitableData("minority class has " + std::to_string(minority) +
                             " rows; cross-validation needs at least 2");
    return k;
}

AucSamples cross_validated_auc(const Table& train, const MaskColumn& target, const CvConfig& cv,
                               const GbdtParams& params, LearningTask task) {
    cv.validate();
    if (target.size() != train.n_rows()) throw InvalidArgument("target length does not match table");
    if (!target.has_both_classes()) throw UnsuitableData("target contains a single class");
    const std::size_t k = effective_folds(target, cv.n_folds);
    if (train.n_rows() < 2 * k)
        throw UnsuitableData("too few rows for " + std::to_string(k) + "-fold cross-validation");

    AucSamples out;
    out.task = task;
    out.fold_of_row = assign_folds(target, k, cv.stratified, cv.seed);
    out.scores.reserve(k);

    std::vector<std::size_t> train_rows, test_rows;
    for (std::uint32_t f = 0; f < k; ++f) {
        train_rows.clear();
        test_rows.clear();
        for (std::size_t i = 0; i < train.n_rows(); ++i)
            (out.fold_of_row[i] == f ? test_rows : train_rows).push_back(i);

        MaskColumn fold_target{{}, target.source_column};
        MaskColumn held_out{{}, target.source_column};
        for (auto r : train_rows) fold_target.bits.push_back(target.bits[r]);
        for (auto r : test_rows) held_out.bits.push_back(target.bits[r]);
        if (!held_out.has_both_classes() || !fold_target.has_both_classes())
            throw UnsuitableData("fold " + std::to_string(f) + " is single-class");

        const auto model = fit(train.take_rows(train_rows), fold_target, params);
        const auto scores = model.predict_scores(train.take_rows(test_rows));
        out.scores.push_back(auc_roc(scores, held_out.bits));
    }
    return out;
}

void apply_run_seed(DetectionConfig& config, std::uint64_t seed) {
    config.cv.seed = derive_seed(seed, fnv1a64("cv"));
    config.shuffle_seed = derive_seed(seed, fnv1a64("shuffle"));
    config.gbdt.seed = derive_seed(seed, fnv1a64("gbdt"));
}

Mechanism decide_mechanism(double p1, double p2, double alpha) {
    const double threshold = bonferroni_threshold(alpha, 2);
    if (p1 < threshold) return p2 < threshold ? Mechanism::MNAR : Mechanism::MAR;
    return Mechanism::MCAR;
}

DetectionResult detect_mechanism(const Table& clean, const Table& perturbed, const ErrorMask& mask,
                                 std::size_t j, const DetectionConfig& config) {
    bonferroni_threshold(config.alpha, 2); // validates alpha
    config.cv.validate();
    config.gbdt.validate();
    check_shapes(clean, perturbed, mask);
    if (j >= clean.n_cols()) throw InvalidArgument("target column index out of range");
    if (clean.n_cols() < 2)
        throw UnsuitableData("the Excluded task needs at least two columns");
    if (clean.n_rows() < config.min_rows)
        throw UnsuitableData("table has " + std::to_string(clean.n_rows()) + " rows; at least " +
                             std::to_string(config.min_rows) + " required");
    const auto errors = mask.column_count(j);
    const auto minority = std::min(errors, mask.rows() - errors);
    if (minority == 0)
        throw UnsuitableData("mask column '" + clean.column(j).name() + "' is single-class");
    if (minority < config.cv.n_folds)
        throw UnsuitableData("minority class of mask column '" + clean.column(j).name() + "' has " +
                             std::to_string(minority) + " rows, fewer than " +
                             std::to_string(config.cv.n_folds) + " folds");

    DetectionResult result;
    result.alpha = config.alpha;
    result.train_source = config.train_source;
    result.column = j;
    result.column_name = clean.column(j).name();
    result.n_folds = config.cv.n_folds;
    result.cv_seed = config.cv.seed;
    result.shuffle_seed = config.shuffle_seed;
    result.gbdt_seed = config.gbdt.seed;

    auto run = [&](LearningTask task) {
        TaskSpec spec{task, config.train_source, j, config.shuffle_seed};
        const auto data = build_task(clean, perturbed, mask, spec);
        return cross_validated_auc(data.train, data.target, config.cv, config.gbdt, task);
    };
    result.complete = run(LearningTask::Complete);
    result.shuffled = run(LearningTask::Shuffled);
    result.excluded = run(LearningTask::Excluded);

    result.p1 = mwu_greater(result.complete, result.shuffled).p_value;
    result.p2_computed = mwu_greater(result.complete, result.excluded).p_value;
    result.mechanism = decide_mechanism(result.p1, result.p2_computed, config.alpha);
    if (result.mechanism != Mechanism::MCAR) result.p2 = result.p2_computed;
    return result;
}

double detection_accuracy(std::span<const std::pair<Mechanism, Mechanism>> verdict_truth) {
    if (verdict_truth.empty()) throw InvalidArgument("detection_accuracy needs at least one result");
    const auto correct = std::count_if(verdict_truth.begin(), verdict_truth.end(),
                                       [](const auto& p) { return p.first == p.second; });
    return static_cast<double>(correct) / static_cast<double>(verdict_truth.size());
}

} // namespace mechdetect
