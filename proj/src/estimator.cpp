#include "mixent/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "mixent/errors.hpp"
#include "mixent/parallel.hpp"

namespace mixent {

Eigen::Index resolve_k(Eigen::Index n, const EstimatorConfig& config) {
  if (n < 2) throw InvalidInput("sample size must be at least 2");
  if (const auto* explicit_k = std::get_if<Eigen::Index>(&config.k)) {
    if (*explicit_k < 1 || *explicit_k > n - 1) {
      throw InvalidInput("k=" + std::to_string(*explicit_k) + " outside [1, " +
                         std::to_string(n - 1) + "] for n=" + std::to_string(n));
    }
    return *explicit_k;
  }
  const auto& schedule = std::get<NeighborSchedule>(config.k);
  if (!(schedule.alpha > 0.0 && schedule.alpha < 1.0)) {
    throw InvalidInput("schedule exponent alpha must lie in (0, 1)");
  }
  if (!(schedule.c > 0.0) || !std::isfinite(schedule.c)) {
    throw InvalidInput("schedule constant c must be positive");
  }
  const double raw = std::round(schedule.c * std::pow(static_cast<double>(n), schedule.alpha));
  return static_cast<Eigen::Index>(std::clamp(raw, 1.0, static_cast<double>(n - 1)));
}

double per_point_term(Eigen::Index k, Eigen::Index xi) {
  return std::log(static_cast<double>(k) / static_cast<double>(xi + 1));
}

BallCount ball_count(const Dataset& dataset, const SpatialIndex& index, Eigen::Index i,
                     Eigen::Index k) {
  const double radius = kth_neighbor_distance(index, i, k);
  const int label = dataset.labels(i);
  BallCount out;
  for (const Eigen::Index j : neighbors_within(index, i, radius)) {
    ++out.total;
    if (dataset.labels(j) == label) ++out.same_label;
  }
  return out;
}

Eigen::Index xi_statistic(const Dataset& dataset, const SpatialIndex& index, Eigen::Index i,
                          Eigen::Index k, bool tie_clamp) {
  const Eigen::Index xi = ball_count(dataset, index, i, k).same_label;
  return tie_clamp ? std::min(xi, k) : xi;
}

EstimateResult conditional_entropy(const Dataset& dataset, const EstimatorConfig& config) {
  validate_dataset(dataset);
  const Eigen::Index n = dataset.size();
  if (n < 2) throw InvalidInput("conditional entropy needs at least 2 points");
  const Eigen::Index k = resolve_k(n, config);
  const SpatialIndex index = build_index(dataset.features, config.leaf_capacity);

  std::vector<Eigen::Index> xi(static_cast<std::size_t>(n));
  std::vector<char> tie(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), config.threads, [&](std::size_t i) {
    const BallCount counts = ball_count(dataset, index, static_cast<Eigen::Index>(i), k);
    xi[i] = config.tie_clamp ? std::min(counts.same_label, k) : counts.same_label;
    tie[i] = counts.total > k;
  });

  EstimateResult result;
  result.k_used = k;
  result.per_point_terms.resize(n);
  // Histogram of xi; without the tie clamp xi can exceed k.
  const Eigen::Index max_xi = *std::max_element(xi.begin(), xi.end());
  std::vector<Eigen::Index> histogram(static_cast<std::size_t>(std::max(max_xi, k) + 1), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index x = xi[static_cast<std::size_t>(i)];
    result.per_point_terms(i) = per_point_term(k, x);
    ++histogram[static_cast<std::size_t>(x)];
    result.tie_events += tie[static_cast<std::size_t>(i)];
  }

  double value = 0.0;
  double lowest = HUGE_VAL;
  double highest = -HUGE_VAL;
  for (std::size_t r = 0; r < histogram.size(); ++r) {
    if (histogram[r] == 0) continue;
    const double term = per_point_term(k, static_cast<Eigen::Index>(r));
    value += (static_cast<double>(histogram[r]) / static_cast<double>(n)) * term;
    lowest = std::min(lowest, term);
    highest = std::max(highest, term);
  }
  // A convex combination of the observed terms; keep rounding inside the hull.
  value = std::clamp(value, lowest, highest);

  result.raw_value = value;
  result.negative_flag = value < 0.0;
  result.value = value;
  if (config.clamp_nonnegative && value < 0.0) {
    result.value = 0.0;
    result.clamped = true;
  }
  return result;
}

double label_entropy(const LabelVector& labels) {
  if (labels.size() == 0) throw InvalidInput("label entropy of an empty sample");
  std::map<int, Eigen::Index> counts;
  for (Eigen::Index i = 0; i < labels.size(); ++i) ++counts[labels(i)];
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (const auto& [label, count] : counts) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const Dataset& dataset, const EstimatorConfig& config) {
  const EstimateResult conditional = conditional_entropy(dataset, config);
  return label_entropy(dataset.labels) - conditional.value;
}

double log_unit_ball_volume(Eigen::Index d) {
  const double half = 0.5 * static_cast<double>(d);
  return half * std::log(M_PI) - std::lgamma(half + 1.0);
}

DifferentialEntropyEstimate kl_differential_entropy(const PointSet& points, Eigen::Index k) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw InvalidInput("differential entropy needs at least 2 points");
  if (k < 1 || k > n - 1) {
    throw InvalidInput("k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  const SpatialIndex index = build_index(points);
  const Eigen::Index d = points.cols();

  DifferentialEntropyEstimate out;
  Vector log_radius(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double rho = kth_neighbor_distance(index, i, k);
    if (rho < kRadiusFloor) {
      rho = kRadiusFloor;
      ++out.floor_events;
    }
    log_radius(i) = std::log(rho);
  }
  const double nd = static_cast<double>(n);
  out.value = boost::math::digamma(nd) - boost::math::digamma(static_cast<double>(k)) +
              log_unit_ball_volume(d) +
              static_cast<double>(d) * pairwise_sum(log_radius) / nd;
  return out;
}

double baseline_conditional_entropy(const Dataset& dataset, Eigen::Index k) {
  validate_dataset(dataset);
  const auto counts = label_counts(dataset);
  const double n = static_cast<double>(dataset.size());
  for (int y = 0; y < dataset.num_labels; ++y) {
    const Eigen::Index c = counts[static_cast<std::size_t>(y)];
    if (c > 0 && c <= k) {
      const std::string name = static_cast<std::size_t>(y) < dataset.label_names.size()
                                   ? dataset.label_names[static_cast<std::size_t>(y)]
                                   : std::to_string(y);
      throw InvalidInput("class '" + name + "' has " + std::to_string(c) +
                         " points; the difference baseline needs more than k=" +
                         std::to_string(k));
    }
  }
  double value = label_entropy(dataset.labels) - kl_differential_entropy(dataset.features, k).value;
  for (int y = 0; y < dataset.num_labels; ++y) {
    const Eigen::Index c = counts[static_cast<std::size_t>(y)];
    if (c == 0) continue;
    const double weight = static_cast<double>(c) / n;
    value += weight * kl_differential_entropy(rows_with_label(dataset, y), k).value;
  }
  return value;
}

}  // namespace mixent
