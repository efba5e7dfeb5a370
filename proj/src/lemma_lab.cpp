#include "mixent/lemma_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "mixent/errors.hpp"
#include "mixent/kd_tree.hpp"
#include "mixent/parallel.hpp"

namespace mixent {

namespace {

// a * log(b) with 0 * log(0) := 0.
double xlogy(double a, double b) { return a == 0.0 ? 0.0 : a * std::log(b); }

void check_rank(std::int64_t n, std::int64_t k) {
  if (n < 2) throw InvalidInput("n must be at least 2");
  if (k < 1 || k > n - 1) {
    throw InvalidInput("k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
}

// Squared distances from x to n - 1 fresh draws, with their labels.
struct NeighborDraw {
  std::vector<double> squared;
  std::vector<int> labels;
};

NeighborDraw draw_neighbors(const PreparedModel& model, const Vector& x, std::int64_t count,
                            Engine& engine) {
  const Dataset draws = model.sample(count, engine);
  NeighborDraw out;
  out.squared.resize(static_cast<std::size_t>(count));
  out.labels.resize(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j) {
    out.squared[static_cast<std::size_t>(j)] = squared_distance(draws.features.row(j), x.transpose());
    out.labels[static_cast<std::size_t>(j)] = draws.labels(j);
  }
  return out;
}

double kth_smallest(std::vector<double> values, std::int64_t k) {
  auto kth = values.begin() + (k - 1);
  std::nth_element(values.begin(), kth, values.end());
  return *kth;
}

}  // namespace

double log_binomial(std::int64_t n, std::int64_t j) {
  if (j < 0 || j > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(n - j) + 1.0);
}

MixturePmf conditional_xi_law(std::int64_t k, double p, double alpha) {
  if (k < 1) throw InvalidInput("k must be at least 1");
  if (!(p >= 0.0 && p <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("p and alpha must lie in [0, 1]");
  }
  MixturePmf out{k, p, alpha, Vector::Zero(k + 1)};
  // Binomial(k - 1, p) pmf, then the mixture of it and its shift by one.
  const boost::math::binomial_distribution<double> binomial(static_cast<double>(k - 1), p);
  for (std::int64_t r = 0; r <= k - 1; ++r) {
    const double mass = boost::math::pdf(binomial, static_cast<double>(r));
    out.pmf(r) += mass * alpha;
    out.pmf(r + 1) += mass * (1.0 - alpha);
  }
  return out;
}

double total_variation(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidInput("pmfs differ in length");
  return 0.5 * (a - b).cwiseAbs().sum();
}

double knn_distance_cdf(const std::function<double(double)>& p_of_u, std::int64_t n,
                        std::int64_t k, double t) {
  check_rank(n, k);
  if (!(t > 0.0)) return 0.0;
  const double p = std::clamp(p_of_u(t), 0.0, 1.0);
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  // Upper binomial tail, evaluated as the regularized incomplete beta I_p(k, n - k).
  return boost::math::ibeta(static_cast<double>(k), static_cast<double>(n - k), p);
}

double knn_distance_density(const std::function<double(double)>& p_of_u,
                            const std::function<double(double)>& f_of_u, std::int64_t n,
                            std::int64_t k, double u) {
  check_rank(n, k);
  if (u < 0.0) throw InvalidInput("radius must be nonnegative");
  const double p = std::clamp(p_of_u(u), 0.0, 1.0);
  const double q = 1.0 - p;
  const std::int64_t m = n - 1;
  double total = 0.0;
  for (std::int64_t j = k; j <= m; ++j) {
    // Exact coefficients while they fit in a double, log-gamma beyond.
    const double log_c =
        m <= 1000 ? std::log(boost::math::binomial_coefficient<double>(static_cast<unsigned>(m),
                                                                      static_cast<unsigned>(j)))
                  : log_binomial(m, j);
    double bracket = static_cast<double>(j) *
                     std::exp(log_c + xlogy(static_cast<double>(j - 1), p) +
                              xlogy(static_cast<double>(m - j), q));
    if (m - j >= 1) {
      bracket -= static_cast<double>(m - j) *
                 std::exp(log_c + xlogy(static_cast<double>(j), p) +
                          xlogy(static_cast<double>(m - j - 1), q));
    }
    total += bracket;
  }
  return total * f_of_u(u);
}

double knn_distance_quantile(const DistanceLaw& law, std::int64_t n, std::int64_t k,
                             double level) {
  check_rank(n, k);
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  auto p_of_u = [&law](double u) { return law.cdf(u); };
  double hi = 1.0;
  while (knn_distance_cdf(p_of_u, n, k, hi) < level) {
    hi *= 2.0;
    if (hi > 1e12) throw InvalidInput("distance quantile did not bracket");
  }
  double lo = 0.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (knn_distance_cdf(p_of_u, n, k, mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LawCheckReport verify_conditional_law(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                      int y, std::int64_t n, std::int64_t k, Shell shell,
                                      std::int64_t replicates, std::uint64_t seed,
                                      const LawCheckOptions& options) {
  check_rank(n, k);
  if (!(shell.t > 0.0) || !(shell.delta > 0.0) || !(shell.delta < shell.t)) {
    throw InvalidInput("shell needs 0 < delta < t");
  }
  if (replicates < 1) throw InvalidInput("replicates must be positive");
  const PreparedModel model(spec);
  if (y < 0 || y >= model.num_labels()) throw InvalidInput("label outside the model alphabet");
  const Vector center = x;
  const DistanceLaw law(spec, center);
  auto p_of_u = [&law](double u) { return law.cdf(u); };
  const double shell_mass = knn_distance_cdf(p_of_u, n, k, shell.t + shell.delta) -
                            knn_distance_cdf(p_of_u, n, k, shell.t - shell.delta);
  const double expected_hits = shell_mass * static_cast<double>(replicates);
  if (expected_hits < static_cast<double>(options.min_hits)) {
    throw Inconclusive("expected " + std::to_string(expected_hits) +
                           " shell hits, below the minimum of " + std::to_string(options.min_hits),
                       static_cast<std::size_t>(expected_hits));
  }

  LawCheckReport report;
  report.shell = shell;
  report.threshold = options.threshold;
  report.replicates_simulated = replicates;
  report.ball_probability =
      ball_label_probability(spec, center, y, shell.t, options.probability_tolerance).value;
  report.sphere_probability =
      sphere_label_probability(spec, center, y, shell.t, options.probability_tolerance).value;
  report.analytic_pmf =
      conditional_xi_law(k, report.ball_probability, 1.0 - report.sphere_probability).pmf;

  // xi per replicate, or -1 when the radius missed the shell.
  std::vector<std::int64_t> outcome(static_cast<std::size_t>(replicates), -1);
  const double lo2 = (shell.t - shell.delta) * (shell.t - shell.delta);
  const double hi2 = (shell.t + shell.delta) * (shell.t + shell.delta);
  parallel_for(static_cast<std::size_t>(replicates), options.threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, {tag(StreamPurpose::kLawCheck), r});
    const NeighborDraw draw = draw_neighbors(model, center, n - 1, engine);
    const double radius2 = kth_smallest(draw.squared, k);
    if (!(radius2 > lo2 && radius2 <= hi2)) return;
    std::int64_t xi = 0;
    for (std::size_t j = 0; j < draw.squared.size(); ++j) {
      if (draw.labels[j] == y && draw.squared[j] <= radius2) ++xi;
    }
    outcome[r] = std::min(xi, k);
  });

  report.empirical_pmf = Vector::Zero(k + 1);
  for (const std::int64_t xi : outcome) {
    if (xi < 0) continue;
    report.empirical_pmf(xi) += 1.0;
    ++report.replicates_used;
  }
  if (report.replicates_used < options.min_hits) {
    throw Inconclusive("only " + std::to_string(report.replicates_used) +
                           " replicates landed in the shell, need " +
                           std::to_string(options.min_hits),
                       static_cast<std::size_t>(report.replicates_used));
  }
  report.empirical_pmf /= static_cast<double>(report.replicates_used);
  report.tv_distance = std::clamp(total_variation(report.empirical_pmf, report.analytic_pmf), 0.0, 1.0);
  report.acceptance = report.tv_distance <= options.threshold;
  return report;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidInput("KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

DistanceCheckReport verify_distance_distribution(const ModelSpec& spec,
                                                 const Eigen::Ref<const Vector>& x,
                                                 std::int64_t n, std::int64_t k,
                                                 std::int64_t samples, std::uint64_t seed,
                                                 unsigned threads) {
  check_rank(n, k);
  if (samples < 1) throw InvalidInput("samples must be positive");
  const PreparedModel model(spec);
  const Vector center = x;
  const DistanceLaw law(spec, center);

  std::vector<double> radii(static_cast<std::size_t>(samples));
  parallel_for(radii.size(), threads, [&](std::size_t r) {
    Engine engine = make_engine(seed, {tag(StreamPurpose::kDistanceCheck), r});
    const NeighborDraw draw = draw_neighbors(model, center, n - 1, engine);
    radii[r] = std::sqrt(kth_smallest(draw.squared, k));
  });

  DistanceCheckReport report;
  report.samples = samples;
  report.exact_cdf = law.exact();
  auto p_of_u = [&law](double u) { return law.cdf(u); };
  report.ks_statistic =
      ks_statistic(std::move(radii), [&](double t) { return knn_distance_cdf(p_of_u, n, k, t); });
  report.band = 1.36 / std::sqrt(static_cast<double>(samples));
  report.within_band = report.ks_statistic <= report.band;
  return report;
}

}  // namespace mixent
