#include "mechdetect/record.hpp"

namespace mechdetect {

Json detection_record(const DetectionResult& result, const RecordContext& context) {
    Json j;
    j["dataset"] = context.dataset;
    j["column"] = result.column_name;
    j["true_mechanism"] =
        context.true_mechanism ? Json(std::string(to_string(*context.true_mechanism))) : Json(nullptr);
    j["verdict"] = std::string(to_string(result.mechanism));
    j["p1"] = result.p1;
    j["p2"] = result.p2 ? Json(*result.p2) : Json(nullptr);
    j["alpha"] = result.alpha;
    j["error_rate"] = context.error_rate ? Json(*context.error_rate) : Json(nullptr);
    j["train_source"] = std::string(to_string(result.train_source));
    j["auc_complete"] = result.complete.scores;
    j["auc_shuffled"] = result.shuffled.scores;
    j["auc_excluded"] = result.excluded.scores;
    j["seeds"] = Json{{"cv", result.cv_seed},
                      {"shuffle", result.shuffle_seed},
                      {"gbdt", result.gbdt_seed}};
    return j;
}

Json perturbation_record(const PerturbationResult& result, const Table& clean,
                         const std::string& input) {
    const auto& spec = result.spec;
    Json j;
    j["input"] = input;
    j["column"] = clean.column(spec.target_column).name();
    j["mechanism"] = std::string(to_string(spec.mechanism));
    j["error_rate"] = spec.error_rate;
    j["conditioning_column"] = spec.conditioning_column
                                   ? Json(clean.column(*spec.conditioning_column).name())
                                   : Json(nullptr);
    j["tail"] = std::string(to_string(spec.tail));
    j["seed"] = spec.seed;
    j["rows"] = clean.n_rows();
    j["errors"] = result.mask.column_count(spec.target_column);
    return j;
}

std::string to_json_line(const Json& j) { return j.dump() + "\n"; }

} // namespace mechdetect
