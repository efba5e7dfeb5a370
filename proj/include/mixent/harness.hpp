#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixent/dataset.hpp"
#include "mixent/estimator.hpp"
#include "mixent/models.hpp"

namespace mixent {

inline constexpr const char* kVersion = "1.0.0";

enum class EstimatorKind { kKnnConditional, kDifferenceBaseline };

std::string to_string(EstimatorKind kind);
/// "knn-conditional" or "difference-baseline".
EstimatorKind parse_estimator_kind(const std::string& name);

struct ExperimentPlan {
  ModelSpec model;
  std::vector<Eigen::Index> n_grid;
  EstimatorConfig k_rule;
  Eigen::Index replicates = 2;
  std::uint64_t base_seed = 0;
  std::vector<EstimatorKind> estimators{EstimatorKind::kKnnConditional};
  double truth_tolerance = 1e-8;
};

/// Throws InvalidInput unless the grid is strictly ascending, replicates >= 2,
/// every n resolves a valid k, and the estimator list is nonempty.
void validate_plan(const ExperimentPlan& plan);

struct ConvergenceRow {
  Eigen::Index n = 0;
  EstimatorKind estimator = EstimatorKind::kKnnConditional;
  Eigen::Index k = 0;
  Eigen::Index replicates = 0;  ///< successful replicates
  Eigen::Index failures = 0;    ///< replicates whose estimator threw
  double mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double standard_error = 0.0;  ///< of the mean
  std::vector<double> estimates;  ///< by replicate index; NaN marks a failure
};

struct ConvergenceReport {
  ExperimentPlan plan;
  GroundTruth ground_truth;
  std::vector<ConvergenceRow> rows;  ///< ordered by (n, estimator)
  std::string version = kVersion;
};

/// Substream seed for one replicate dataset.
std::uint64_t replicate_stream(std::uint64_t base_seed, Eigen::Index n, Eigen::Index replicate);

/// Draws the dataset that run_convergence uses for (n, replicate).
Dataset replicate_dataset(const ExperimentPlan& plan, Eigen::Index n, Eigen::Index replicate);

/**
 * Bias and MSE of each estimator against the model's ground truth across the
 * sample-size grid. Replicates run on `threads` workers; the report does not
 * depend on the worker count.
 */
ConvergenceReport run_convergence(const ExperimentPlan& plan, unsigned threads = 1);

struct FeatureScore {
  Eigen::Index feature = 0;
  double mutual_information = 0.0;
  Eigen::Index rank = 0;   ///< 1-based
  bool degenerate = false;  ///< constant column
};

struct FeatureRanking {
  std::vector<FeatureScore> scores;  ///< sorted by rank
  Eigen::Index k_used = 0;
};

/// Marginal MI of every single feature with the label, ranked descending with
/// ties broken by ascending feature index.
FeatureRanking rank_features(const Dataset& dataset, const EstimatorConfig& config = {});

}  // namespace mixent
