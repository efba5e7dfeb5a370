#include "mixent/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixent/errors.hpp"
#include "mixent/parallel.hpp"

namespace mixent {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kKnnConditional: return "knn-conditional";
    case EstimatorKind::kDifferenceBaseline: return "difference-baseline";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "knn-conditional") return EstimatorKind::kKnnConditional;
  if (name == "difference-baseline") return EstimatorKind::kDifferenceBaseline;
  throw InvalidInput("unknown estimator '" + name +
                     "' (expected knn-conditional or difference-baseline)");
}

void validate_plan(const ExperimentPlan& plan) {
  validate_model(plan.model);
  if (plan.n_grid.empty()) throw InvalidInput("n_grid is empty");
  for (std::size_t i = 0; i < plan.n_grid.size(); ++i) {
    if (i > 0 && plan.n_grid[i] <= plan.n_grid[i - 1]) {
      throw InvalidInput("n_grid must be strictly ascending");
    }
    resolve_k(plan.n_grid[i], plan.k_rule);
  }
  if (plan.replicates < 2) throw InvalidInput("replicates must be at least 2");
  if (plan.estimators.empty()) throw InvalidInput("no estimators selected");
  if (!(plan.truth_tolerance > 0.0)) throw InvalidInput("truth tolerance must be positive");
}

std::uint64_t replicate_stream(std::uint64_t base_seed, Eigen::Index n, Eigen::Index replicate) {
  return derive_stream(base_seed, {tag(StreamPurpose::kSample), static_cast<std::uint64_t>(n),
                                   static_cast<std::uint64_t>(replicate)});
}

Dataset replicate_dataset(const ExperimentPlan& plan, Eigen::Index n, Eigen::Index replicate) {
  const PreparedModel model(plan.model);
  Engine engine(replicate_stream(plan.base_seed, n, replicate));
  return model.sample(n, engine);
}

ConvergenceReport run_convergence(const ExperimentPlan& plan, unsigned threads) {
  validate_plan(plan);
  ConvergenceReport report;
  report.plan = plan;
  try {
    report.ground_truth = true_conditional_entropy(plan.model, plan.truth_tolerance);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("ground truth failed: ") + e.what());
  }
  const PreparedModel model(plan.model);
  const double truth = report.ground_truth.value;
  const std::size_t grid = plan.n_grid.size();
  const std::size_t kinds = plan.estimators.size();
  const auto replicates = static_cast<std::size_t>(plan.replicates);
  constexpr double kFailed = std::numeric_limits<double>::quiet_NaN();

  // estimates[(g * kinds + e) * replicates + r]
  std::vector<double> estimates(grid * kinds * replicates, kFailed);
  EstimatorConfig config = plan.k_rule;
  config.threads = 1;
  parallel_for(grid * replicates, threads, [&](std::size_t job) {
    const std::size_t g = job / replicates;
    const std::size_t r = job % replicates;
    const Eigen::Index n = plan.n_grid[g];
    Engine engine(replicate_stream(plan.base_seed, n, static_cast<Eigen::Index>(r)));
    const Dataset data = model.sample(n, engine);
    const Eigen::Index k = resolve_k(n, config);
    for (std::size_t e = 0; e < kinds; ++e) {
      double value = kFailed;
      try {
        value = plan.estimators[e] == EstimatorKind::kKnnConditional
                    ? conditional_entropy(data, config).value
                    : baseline_conditional_entropy(data, k);
      } catch (const InvalidInput&) {
        value = kFailed;
      }
      estimates[(g * kinds + e) * replicates + r] = value;
    }
  });

  for (std::size_t g = 0; g < grid; ++g) {
    for (std::size_t e = 0; e < kinds; ++e) {
      ConvergenceRow row;
      row.n = plan.n_grid[g];
      row.estimator = plan.estimators[e];
      row.k = resolve_k(row.n, config);
      const auto first = estimates.begin() + static_cast<std::ptrdiff_t>((g * kinds + e) * replicates);
      row.estimates.assign(first, first + static_cast<std::ptrdiff_t>(replicates));
      std::vector<double> ok;
      for (const double v : row.estimates) {
        if (std::isnan(v)) {
          ++row.failures;
        } else {
          ok.push_back(v);
        }
      }
      row.replicates = static_cast<Eigen::Index>(ok.size());
      if (!ok.empty()) {
        const double count = static_cast<double>(ok.size());
        row.mean = pairwise_sum(ok) / count;
        row.bias = row.mean - truth;
        std::vector<double> squared_error(ok.size());
        std::vector<double> squared_dev(ok.size());
        for (std::size_t i = 0; i < ok.size(); ++i) {
          squared_error[i] = (ok[i] - truth) * (ok[i] - truth);
          squared_dev[i] = (ok[i] - row.mean) * (ok[i] - row.mean);
        }
        row.mse = pairwise_sum(squared_error) / count;
        row.standard_error =
            ok.size() > 1 ? std::sqrt(pairwise_sum(squared_dev) / (count - 1.0) / count) : 0.0;
      } else {
        row.mean = row.bias = row.mse = row.standard_error = kFailed;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

FeatureRanking rank_features(const Dataset& dataset, const EstimatorConfig& config) {
  validate_dataset(dataset);
  FeatureRanking ranking;
  ranking.k_used = resolve_k(dataset.size(), config);
  for (Eigen::Index j = 0; j < dataset.dimension(); ++j) {
    FeatureScore score;
    score.feature = j;
    const auto column = dataset.features.col(j);
    score.degenerate = column.maxCoeff() == column.minCoeff();
    score.mutual_information = mutual_information(project_column(dataset, j), config);
    ranking.scores.push_back(score);
  }
  std::stable_sort(ranking.scores.begin(), ranking.scores.end(),
                   [](const FeatureScore& a, const FeatureScore& b) {
                     if (a.mutual_information != b.mutual_information) {
                       return a.mutual_information > b.mutual_information;
                     }
                     return a.feature < b.feature;
                   });
  for (std::size_t i = 0; i < ranking.scores.size(); ++i) {
    ranking.scores[i].rank = static_cast<Eigen::Index>(i + 1);
  }
  return ranking;
}

}  // namespace mixent
