#pragma once

#include <cstdint>
#include <functional>

#include "mixent/models.hpp"
#include "mixent/types.hpp"

namespace mixent {

/// log C(n, j) via lgamma; -inf when j is outside [0, n].
double log_binomial(std::int64_t n, std::int64_t j);

/// Law of the same-label count r in {0, ..., k} given the k-NN radius.
struct MixturePmf {
  std::int64_t k = 1;
  double p = 0.0;
  double alpha = 0.0;
  Vector pmf;
};

/**
 * pmf(r) = C(k-1, r)   p^r     (1-p)^(k-1-r) alpha
 *        + C(k-1, r-1) p^(r-1) (1-p)^(k-r)   (1-alpha)
 *
 * p is the label probability inside the ball, alpha the probability that the
 * point on the sphere carries a different label. Binomial coefficients with
 * out-of-range arguments are zero.
 */
MixturePmf conditional_xi_law(std::int64_t k, double p, double alpha);

/// Half the l1 distance between two pmfs of equal length.
double total_variation(const Vector& a, const Vector& b);

struct Shell {
  double t = 0.0;
  double delta = 0.0;
};

struct LawCheckReport {
  Vector empirical_pmf;
  Vector analytic_pmf;
  double tv_distance = 0.0;
  std::int64_t replicates_used = 0;  ///< replicates whose radius fell in the shell
  std::int64_t replicates_simulated = 0;
  Shell shell;
  double ball_probability = 0.0;    ///< p at the shell center
  double sphere_probability = 0.0;  ///< 1 - alpha at the shell center
  double threshold = 0.05;
  bool acceptance = false;
};

struct LawCheckOptions {
  double threshold = 0.05;
  /// Both the expected and the realized shell hit counts must reach this.
  std::int64_t min_hits = 500;
  double probability_tolerance = 1e-4;
  unsigned threads = 1;
};

/**
 * Simulates the sample Z_2..Z_n around a fixed point (x, y), keeps the
 * replicates whose k-NN radius lands in (t - delta, t + delta], and compares
 * the tabulated same-label count with conditional_xi_law. Throws Inconclusive
 * when too few replicates land in the shell.
 */
LawCheckReport verify_conditional_law(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                      int y, std::int64_t n, std::int64_t k, Shell shell,
                                      std::int64_t replicates, std::uint64_t seed,
                                      const LawCheckOptions& options = {});

/// Radius where the analytic CDF of rho_{n,k,1}(x) equals `level`.
double knn_distance_quantile(const DistanceLaw& law, std::int64_t n, std::int64_t k,
                             double level = 0.5);

/// P(rho_{n,k,1}(x) <= t) = sum_{j=k}^{n-1} C(n-1, j) p^j (1-p)^(n-1-j), p = p_x(t).
double knn_distance_cdf(const std::function<double(double)>& p_of_u, std::int64_t n,
                        std::int64_t k, double t);

/**
 * Density of the k-NN radius among n - 1 i.i.d. neighbors:
 *
 *   h(u) = sum_{j=k}^{n-1} C(n-1, j) [ j p^(j-1) (1-p)^(n-1-j)
 *                                     - p^j (n-j-1) (1-p)^(n-j-2) ] f(u),
 *
 * with p = p_of_u(u), f = f_of_u(u). Templated on the scalar so the sum can be
 * evaluated in extended precision where the alternating terms cancel.
 */
template <typename Scalar>
Scalar knn_distance_density_sum(std::int64_t n, std::int64_t k, const Scalar& p);

double knn_distance_density(const std::function<double(double)>& p_of_u,
                            const std::function<double(double)>& f_of_u, std::int64_t n,
                            std::int64_t k, double u);

struct DistanceCheckReport {
  double ks_statistic = 0.0;
  double band = 0.0;  ///< 1.36 / sqrt(samples), the 95% Kolmogorov band
  std::int64_t samples = 0;
  bool within_band = false;
  bool exact_cdf = true;
};

/// Kolmogorov-Smirnov distance between simulated rho_{n,k,1}(x) and the
/// analytic CDF.
DistanceCheckReport verify_distance_distribution(const ModelSpec& spec,
                                                 const Eigen::Ref<const Vector>& x,
                                                 std::int64_t n, std::int64_t k,
                                                 std::int64_t samples, std::uint64_t seed,
                                                 unsigned threads = 1);

/// KS statistic of sorted samples against a CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar knn_distance_density_sum(std::int64_t n, std::int64_t k, const Scalar& p) {
  using std::pow;
  const std::int64_t m = n - 1;
  const Scalar one(1);
  const Scalar q = one - p;
  Scalar total(0);
  Scalar binom(1);  // C(m, j), built incrementally from C(m, 0)
  for (std::int64_t j = 1; j <= k; ++j) binom = binom * Scalar(m - j + 1) / Scalar(j);
  for (std::int64_t j = k; j <= m; ++j) {
    Scalar bracket = Scalar(j) * pow(p, static_cast<int>(j - 1)) * pow(q, static_cast<int>(m - j));
    if (m - j - 1 >= 0) {
      bracket -= pow(p, static_cast<int>(j)) * Scalar(m - j) * pow(q, static_cast<int>(m - j - 1));
    }
    total += binom * bracket;
    binom = binom * Scalar(m - j) / Scalar(j + 1);
  }
  return total;
}

}  // namespace mixent
