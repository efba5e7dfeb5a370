#pragma once

#include <variant>

#include "mixent/dataset.hpp"
#include "mixent/spatial.hpp"
#include "mixent/types.hpp"

namespace mixent {

/// k = clamp(round(c * n^alpha), 1, n - 1).
struct NeighborSchedule {
  double alpha = 0.5;
  double c = 1.0;
};

struct EstimatorConfig {
  /// Either an explicit neighbor count or a schedule in n.
  std::variant<NeighborSchedule, Eigen::Index> k = NeighborSchedule{};
  /// Report max(0, estimate) instead of the raw value.
  bool clamp_nonnegative = false;
  /// Cap the same-label ball count at k when ties enlarge the closed ball.
  bool tie_clamp = true;
  Eigen::Index leaf_capacity = SpatialIndex::kDefaultLeafCapacity;
  /// Worker count for per-point terms; 0 uses all cores. Never affects results.
  unsigned threads = 1;
};

struct EstimateResult {
  double value = 0.0;      ///< nats; clamped only if clamp_nonnegative
  double raw_value = 0.0;  ///< unclamped estimate
  Vector per_point_terms;  ///< log(k / (xi_i + 1))
  Eigen::Index k_used = 0;
  Eigen::Index tie_events = 0;  ///< points whose closed ball held more than k others
  bool negative_flag = false;   ///< raw_value < 0
  bool clamped = false;         ///< value was replaced by 0
};

Eigen::Index resolve_k(Eigen::Index n, const EstimatorConfig& config);

/// log(k / (xi + 1)): the contribution of one point.
double per_point_term(Eigen::Index k, Eigen::Index xi);

struct BallCount {
  Eigen::Index same_label = 0;  ///< j != i in the closed ball with Y_j == Y_i
  Eigen::Index total = 0;       ///< every j != i in the closed ball
};

/// Counts inside the closed ball of radius rho_{n,k,i} around point i.
BallCount ball_count(const Dataset& dataset, const SpatialIndex& index, Eigen::Index i,
                     Eigen::Index k);

/// xi_{n,k,i}, optionally capped at k.
Eigen::Index xi_statistic(const Dataset& dataset, const SpatialIndex& index, Eigen::Index i,
                          Eigen::Index k, bool tie_clamp = true);

/**
 * k-NN estimate of the conditional entropy H(Y|X) in nats:
 *
 *   H_hat = (1/n) sum_i [ log k - log(xi_i + 1) ],
 *
 * where xi_i counts the other points sharing Y_i inside the closed ball whose
 * radius is the distance from X_i to its k-th nearest neighbor.
 *
 * The mean is reduced over the histogram of xi values, so the result does not
 * depend on sample order, label names or thread count.
 */
EstimateResult conditional_entropy(const Dataset& dataset, const EstimatorConfig& config = {});

/// Plug-in entropy of the empirical label frequencies, nats.
double label_entropy(const LabelVector& labels);

/// label_entropy - conditional_entropy; reported raw, so it can be negative.
double mutual_information(const Dataset& dataset, const EstimatorConfig& config = {});

struct DifferentialEntropyEstimate {
  double value = 0.0;
  Eigen::Index floor_events = 0;  ///< points whose k-NN radius was floored
};

/// Smallest radius fed to the logarithm in the Kozachenko-Leonenko estimate.
inline constexpr double kRadiusFloor = 1e-12;

/// log volume of the unit ball in R^d.
double log_unit_ball_volume(Eigen::Index d);

/// Kozachenko-Leonenko estimate
/// psi(n) - psi(k) + log V_d + (d/n) sum_i log rho_{n,k,i}.
DifferentialEntropyEstimate kl_differential_entropy(const PointSet& points, Eigen::Index k);

/// H(Y) - H(X) + sum_y p(y) H(X | Y = y), each differential term from
/// kl_differential_entropy. Every class needs at least k + 1 points.
double baseline_conditional_entropy(const Dataset& dataset, Eigen::Index k);

}  // namespace mixent
