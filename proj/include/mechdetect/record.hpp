#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "mechdetect/detect.hpp"
#include "mechdetect/perturb.hpp"

namespace mechdetect {

using Json = nlohmann::ordered_json;

struct RecordContext {
    std::string dataset;
    std::optional<Mechanism> true_mechanism;
    std::optional<double> error_rate;
};

// {dataset, column, true_mechanism, verdict, p1, p2, alpha, error_rate,
//  train_source, auc_complete[], auc_shuffled[], auc_excluded[], seeds}.
// p2 is null for an MCAR verdict; unknown optional fields are null.
Json detection_record(const DetectionResult& result, const RecordContext& context);

/// Parameters of an injection run, enough to redo it.
Json perturbation_record(const PerturbationResult& result, const Table& clean,
                         const std::string& input);

/// Single-line JSON text with a trailing newline.
std::string to_json_line(const Json& j);

} // namespace mechdetect
