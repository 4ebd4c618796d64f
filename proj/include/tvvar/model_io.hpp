#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "tvvar/evaluation.hpp"
#include "tvvar/inference.hpp"
#include "tvvar/model.hpp"
#include "tvvar/simulation.hpp"

namespace tvvar {

nlohmann::json model_to_json(const TimeVaryingVarModel& model);
TimeVaryingVarModel model_from_json(const nlohmann::json& doc);

// Ground truth serializes as specs + theta + sigma + seed + n; the value
// slices are regenerated on load.
nlohmann::json truth_to_json(const CoefficientArray& truth);
CoefficientArray truth_from_json(const nlohmann::json& doc);

nlohmann::json bootstrap_to_json(const BootstrapDistribution& dist);
void bootstrap_quantiles_to_csv(const BootstrapDistribution& dist, std::ostream& out);

nlohmann::json prediction_report_to_json(const PredictionErrorReport& report);
void prediction_report_to_csv(const PredictionErrorReport& report, std::ostream& out);

nlohmann::json evaluation_report_to_json(const EvaluationReport& report);
void evaluation_report_to_csv(const EvaluationReport& report, std::ostream& out);
EvaluationReport evaluation_report_from_json(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

}  // namespace tvvar
