#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mixent/dataset.hpp"
#include "mixent/random.hpp"
#include "mixent/types.hpp"

namespace mixent {

/// X ~ N(mean, covariance); P(Y = 1 | X = x) = 1 / (1 + exp(-(w, x) - b)).
/// External labels are "1" and "2", internal ids 0 and 1.
struct LogisticGaussianSpec {
  Vector mean;
  Matrix covariance;
  Vector weights;
  double intercept = 0.0;

  Eigen::Index dimension() const { return mean.size(); }
};

/// Y ~ priors, then X | Y = y ~ N(means[y], covariances[y]).
struct ClassGaussianSpec {
  Vector priors;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  Eigen::Index dimension() const { return means.empty() ? 0 : means.front().size(); }
};

using ModelSpec = std::variant<LogisticGaussianSpec, ClassGaussianSpec>;

/// Standard isotropic spec: a = 0, Sigma = I.
LogisticGaussianSpec logistic_model(Vector weights, double intercept);

Eigen::Index dimension(const ModelSpec& spec);
int num_labels(const ModelSpec& spec);

/// Throws InvalidInput unless all entries are finite, shapes agree,
/// covariances are symmetric positive definite and priors are a strictly
/// positive probability vector.
void validate_model(const ModelSpec& spec);

/// A Gaussian with its Cholesky factor cached.
class Gaussian {
 public:
  Gaussian(Vector mean, const Matrix& covariance);

  const Vector& mean() const { return mean_; }
  const Matrix& factor() const { return factor_; }
  Eigen::Index dimension() const { return mean_.size(); }
  double log_density(const Eigen::Ref<const Vector>& x) const;
  /// Isotropic means covariance == sigma^2 I exactly.
  bool isotropic() const { return isotropic_; }
  double isotropic_variance() const { return variance_; }
  Vector draw(Engine& engine) const;

 private:
  Vector mean_;
  Matrix factor_;  // lower triangular, covariance = L L^T
  double log_normalizer_ = 0.0;
  bool isotropic_ = false;
  double variance_ = 0.0;
};

/// Validated model with factorizations cached for repeated evaluation.
class PreparedModel {
 public:
  explicit PreparedModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  Eigen::Index dimension() const { return dimension_; }
  int num_labels() const { return num_labels_; }

  /// Log of the marginal density f_X(x).
  double log_density(const Eigen::Ref<const Vector>& x) const;
  /// f_{Y|X}(.|x), log-sum-exp stabilized; components sum to 1.
  Vector posterior(const Eigen::Ref<const Vector>& x) const;
  /// -sum_y f(y|x) log f(y|x).
  double posterior_entropy(const Eigen::Ref<const Vector>& x) const;

  /// Mixture components of the marginal law of X with their weights.
  const std::vector<Gaussian>& components() const { return components_; }
  const Vector& component_weights() const { return weights_; }

  /// Draws n >= 1 i.i.d. pairs from engine.
  Dataset sample(Eigen::Index n, Engine& engine) const;

 private:
  ModelSpec spec_;
  Eigen::Index dimension_ = 0;
  int num_labels_ = 0;
  std::vector<Gaussian> components_;
  Vector weights_;
  Vector log_weights_;
};

/// n i.i.d. draws; identical (spec, n, seed) gives identical output.
Dataset sample(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Posterior probability vector at x.
Vector posterior(const ModelSpec& spec, const Eigen::Ref<const Vector>& x);

enum class GroundTruthMethod { kQuadrature, kMonteCarlo, kClosedForm };

std::string to_string(GroundTruthMethod method);

struct GroundTruth {
  double value = 0.0;
  GroundTruthMethod method = GroundTruthMethod::kQuadrature;
  double error_bound = 0.0;  ///< absolute bound (quadrature) or standard error (MC)
  std::int64_t evaluations = 0;
};

/// Largest Monte Carlo sample any oracle in this module will draw.
inline constexpr std::int64_t kMaxMonteCarloSamples = 10'000'000;

/**
 * H(Y|X) of the model in nats.
 *
 * Logistic models reduce exactly to the scalar T = (w, X) + b ~ N(m, s^2); the
 * expected binary entropy of sigmoid(T) is integrated adaptively on m +- 10 s
 * with the Gaussian tail mass times log 2 added to the error bound.
 * Class-Gaussian models use Monte Carlo over X of the posterior entropy,
 * drawing until the standard error reaches `tolerance` or the sample cap.
 */
GroundTruth true_conditional_entropy(const ModelSpec& spec, double tolerance = 1e-8);

/// Probability estimate with its absolute error bound or standard error.
struct Probability {
  double value = 0.0;
  double error_bound = 0.0;
  std::int64_t evaluations = 0;
};

/// P(Y = y | X in closed ball B(x, t)). Exact-to-tolerance quadrature in d = 1;
/// otherwise a ratio estimator over points uniform in the ball.
Probability ball_label_probability(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                   int y, double t, double tolerance = 1e-6);

/// P(Y = y | ||X - x|| = t), the posterior averaged against the law of X on
/// the sphere. Two-point formula in d = 1, periodic trapezoid in d = 2,
/// Monte Carlo over uniform directions for d >= 3.
Probability sphere_label_probability(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                     int y, double t, double tolerance = 1e-6);

/**
 * Law of the distance ||X - x|| for X drawn from the model.
 *
 * Exact when every mixture component is isotropic (noncentral chi-square in
 * the squared distance). Otherwise the CDF comes from a fixed-seed Monte
 * Carlo table and the density is unavailable.
 */
class DistanceLaw {
 public:
  DistanceLaw(const ModelSpec& spec, const Eigen::Ref<const Vector>& x);

  bool exact() const { return exact_; }
  /// P(||X - x|| <= t).
  double cdf(double t) const;
  /// Density of ||X - x|| at t; throws InvalidInput when not exact.
  double density(double t) const;

 private:
  PreparedModel model_;
  Vector center_;
  bool exact_ = true;
  std::vector<double> table_;  // sorted Monte Carlo distances
};

}  // namespace mixent
