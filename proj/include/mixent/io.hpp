#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "mixent/dataset.hpp"
#include "mixent/estimator.hpp"
#include "mixent/harness.hpp"
#include "mixent/lemma_lab.hpp"
#include "mixent/models.hpp"

namespace mixent {

inline constexpr const char* kModelSchema = "mixent.model/1";
inline constexpr const char* kRunSchema = "mixent.run/1";
inline constexpr const char* kConvergenceSchema = "mixent.convergence/1";
inline constexpr const char* kEstimateSchema = "mixent.estimate/1";
inline constexpr const char* kLemmaSchema = "mixent.lemma-check/1";
inline constexpr const char* kDensitySchema = "mixent.density-check/1";
inline constexpr const char* kRankingSchema = "mixent.rank-features/1";

/// Reads a dataset from CSV text. The header names the columns; `label_column`
/// selects the label (empty means the last column). Labels map to ids in order
/// of first appearance. Errors name the offending row and column.
Dataset read_csv_dataset(std::istream& in, const std::string& label_column = "");

/// read_csv_dataset on a file path.
Dataset ingest_csv(const std::string& path, const std::string& label_column = "");

/// Header x1..xd,y; features in shortest round-trip form, labels by name.
void write_csv_dataset(std::ostream& out, const Dataset& dataset);

/// Shortest decimal string that parses back to the same double.
std::string format_round_trip(double value);
/// Six significant digits for human-readable output.
std::string format_text(double value);

nlohmann::json model_to_json(const ModelSpec& spec);
/// Parses a model object. `require_schema` demands "schema": "mixent.model/1".
/// Unknown keys are rejected.
ModelSpec model_from_json(const nlohmann::json& doc, bool require_schema = true);

/// Sections of a run configuration file; each is optional.
struct RunConfig {
  std::optional<EstimatorConfig> estimator;
  std::optional<ModelSpec> model;
  std::optional<ExperimentPlan> plan;  ///< plan.model and plan.k_rule filled from the other sections
};

/// Parses a "mixent.run/1" document; unknown keys are rejected at every level.
RunConfig run_config_from_json(const nlohmann::json& doc);

nlohmann::json estimator_config_to_json(const EstimatorConfig& config);
EstimatorConfig estimator_config_from_json(const nlohmann::json& doc);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
nlohmann::json ground_truth_to_json(const GroundTruth& truth);
nlohmann::json convergence_to_json(const ConvergenceReport& report);
/// One row per (n, estimator).
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);

nlohmann::json law_check_to_json(const LawCheckReport& report);
nlohmann::json distance_check_to_json(const DistanceCheckReport& report);

/// Reads and parses a JSON file; throws InvalidInput on I/O or syntax errors.
nlohmann::json read_json_file(const std::string& path);

}  // namespace mixent
