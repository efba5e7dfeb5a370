#include "mixent/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixent/errors.hpp"

namespace mixent {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::uint64_t kOracleSeed = 0x6d697865'6e74ull;

// Numerically stable log(1 + exp(u)).
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Binary entropy of sigmoid(t), computed from the logit.
double logit_entropy(double t) {
  return sigmoid(t) * softplus(-t) + sigmoid(-t) * softplus(t);
}

double log_sum_exp(const Vector& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_finite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidInput(what + " has a non-finite entry");
}

void check_covariance(const Matrix& covariance, Eigen::Index d, const std::string& what) {
  if (covariance.rows() != d || covariance.cols() != d) {
    throw InvalidInput(what + " must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  check_finite(covariance, what);
  if (!covariance.isApprox(covariance.transpose(), 1e-12) &&
      (covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidInput(what + " is not symmetric");
  }
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw InvalidInput(what + " is not positive definite");
}

// Running mean and variance (Welford).
struct RunningMoments {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  double standard_error() const {
    if (count < 2) return HUGE_VAL;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

Vector unit_direction(Eigen::Index d, Engine& engine) {
  Vector u(d);
  do {
    for (Eigen::Index j = 0; j < d; ++j) u(j) = standard_normal(engine);
  } while (u.squaredNorm() == 0.0);
  return u / u.norm();
}

void check_label(const PreparedModel& model, int y) {
  if (y < 0 || y >= model.num_labels()) {
    throw InvalidInput("label id " + std::to_string(y) + " outside the model alphabet");
  }
}

void check_point(const PreparedModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.dimension()) {
    throw InvalidInput("point has dimension " + std::to_string(x.size()) + ", model has " +
                       std::to_string(model.dimension()));
  }
  if (!x.allFinite()) throw InvalidInput("point has a non-finite coordinate");
}

void check_radius(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("radius must be positive and finite");
}

void check_tolerance(double tolerance) {
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance must be positive");
}

}  // namespace

LogisticGaussianSpec logistic_model(Vector weights, double intercept) {
  const Eigen::Index d = weights.size();
  return {Vector::Zero(d), Matrix::Identity(d, d), std::move(weights), intercept};
}

Eigen::Index dimension(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return s.dimension(); }, spec);
}

int num_labels(const ModelSpec& spec) {
  if (std::holds_alternative<LogisticGaussianSpec>(spec)) return 2;
  return static_cast<int>(std::get<ClassGaussianSpec>(spec).priors.size());
}

void validate_model(const ModelSpec& spec) {
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec)) {
    const Eigen::Index d = logistic->mean.size();
    if (d < 1) throw InvalidInput("model dimension must be at least 1");
    check_finite(logistic->mean, "mean");
    if (logistic->weights.size() != d) throw InvalidInput("weights must have length " + std::to_string(d));
    check_finite(logistic->weights, "weights");
    if (!std::isfinite(logistic->intercept)) throw InvalidInput("intercept is not finite");
    check_covariance(logistic->covariance, d, "covariance");
    return;
  }
  const auto& classes = std::get<ClassGaussianSpec>(spec);
  const Eigen::Index m = classes.priors.size();
  if (m < 2) throw InvalidInput("class-Gaussian model needs at least 2 classes");
  if (static_cast<Eigen::Index>(classes.means.size()) != m ||
      static_cast<Eigen::Index>(classes.covariances.size()) != m) {
    throw InvalidInput("class-Gaussian model needs one mean and covariance per class");
  }
  check_finite(classes.priors, "priors");
  if ((classes.priors.array() <= 0.0).any()) throw InvalidInput("priors must be strictly positive");
  if (std::abs(classes.priors.sum() - 1.0) > 1e-12) throw InvalidInput("priors must sum to 1");
  const Eigen::Index d = classes.means.front().size();
  if (d < 1) throw InvalidInput("model dimension must be at least 1");
  for (Eigen::Index y = 0; y < m; ++y) {
    const auto idx = static_cast<std::size_t>(y);
    if (classes.means[idx].size() != d) throw InvalidInput("class means differ in dimension");
    check_finite(classes.means[idx], "mean of class " + std::to_string(y + 1));
    check_covariance(classes.covariances[idx], d, "covariance of class " + std::to_string(y + 1));
  }
}

Gaussian::Gaussian(Vector mean, const Matrix& covariance) : mean_(std::move(mean)) {
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw InvalidInput("covariance is not positive definite");
  factor_ = llt.matrixL();
  const double log_det = 2.0 * factor_.diagonal().array().log().sum();
  log_normalizer_ = -0.5 * (static_cast<double>(mean_.size()) * kLog2Pi + log_det);
  variance_ = covariance(0, 0);
  isotropic_ = covariance.isDiagonal(0.0) &&
               (covariance.diagonal().array() == variance_).all();
}

double Gaussian::log_density(const Eigen::Ref<const Vector>& x) const {
  const Vector z = factor_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_normalizer_ - 0.5 * z.squaredNorm();
}

Vector Gaussian::draw(Engine& engine) const {
  Vector z(mean_.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = standard_normal(engine);
  return mean_ + factor_ * z;
}

PreparedModel::PreparedModel(ModelSpec spec) : spec_(std::move(spec)) {
  validate_model(spec_);
  dimension_ = mixent::dimension(spec_);
  num_labels_ = mixent::num_labels(spec_);
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec_)) {
    components_.emplace_back(logistic->mean, logistic->covariance);
    weights_ = Vector::Ones(1);
  } else {
    const auto& classes = std::get<ClassGaussianSpec>(spec_);
    for (std::size_t y = 0; y < classes.means.size(); ++y) {
      components_.emplace_back(classes.means[y], classes.covariances[y]);
    }
    weights_ = classes.priors;
  }
  log_weights_ = weights_.array().log();
}

double PreparedModel::log_density(const Eigen::Ref<const Vector>& x) const {
  Vector terms(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    terms(static_cast<Eigen::Index>(c)) =
        log_weights_(static_cast<Eigen::Index>(c)) + components_[c].log_density(x);
  }
  return log_sum_exp(terms);
}

Vector PreparedModel::posterior(const Eigen::Ref<const Vector>& x) const {
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec_)) {
    const double t = logistic->weights.dot(x) + logistic->intercept;
    Vector p(2);
    p << sigmoid(t), sigmoid(-t);
    return p;
  }
  Vector terms(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    terms(static_cast<Eigen::Index>(c)) =
        log_weights_(static_cast<Eigen::Index>(c)) + components_[c].log_density(x);
  }
  const double top = terms.maxCoeff();
  Vector p = (terms.array() - top).exp();
  return p / p.sum();
}

double PreparedModel::posterior_entropy(const Eigen::Ref<const Vector>& x) const {
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec_)) {
    return logit_entropy(logistic->weights.dot(x) + logistic->intercept);
  }
  const Vector p = posterior(x);
  double h = 0.0;
  for (Eigen::Index y = 0; y < p.size(); ++y) {
    if (p(y) > 0.0) h -= p(y) * std::log(p(y));
  }
  return h;
}

Dataset PreparedModel::sample(Eigen::Index n, Engine& engine) const {
  if (n < 1) throw InvalidInput("sample size must be positive");
  Dataset out;
  out.features.resize(n, dimension_);
  out.labels.resize(n);
  out.num_labels = num_labels_;
  for (int y = 0; y < num_labels_; ++y) out.label_names.push_back(std::to_string(y + 1));

  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec_)) {
    const Gaussian& law = components_.front();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector x = law.draw(engine);
      const double t = logistic->weights.dot(x) + logistic->intercept;
      out.features.row(i) = x.transpose();
      out.labels(i) = uniform_open01(engine) < sigmoid(t) ? 0 : 1;
    }
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = uniform_open01(engine);
    int y = 0;
    double cumulative = weights_(0);
    while (y + 1 < num_labels_ && u >= cumulative) {
      ++y;
      cumulative += weights_(y);
    }
    out.labels(i) = y;
    out.features.row(i) = components_[static_cast<std::size_t>(y)].draw(engine).transpose();
  }
  return out;
}

Dataset sample(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("sample size must be at least 2");
  const PreparedModel model(spec);
  Engine engine = make_engine(seed, {tag(StreamPurpose::kSample)});
  return model.sample(n, engine);
}

Vector posterior(const ModelSpec& spec, const Eigen::Ref<const Vector>& x) {
  const PreparedModel model(spec);
  check_point(model, x);
  return model.posterior(x);
}

std::string to_string(GroundTruthMethod method) {
  switch (method) {
    case GroundTruthMethod::kQuadrature: return "quadrature";
    case GroundTruthMethod::kMonteCarlo: return "monte-carlo";
    case GroundTruthMethod::kClosedForm: return "closed-form";
  }
  return "unknown";
}

GroundTruth true_conditional_entropy(const ModelSpec& spec, double tolerance) {
  check_tolerance(tolerance);
  const PreparedModel model(spec);
  GroundTruth truth;
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec)) {
    const double center = logistic->weights.dot(logistic->mean) + logistic->intercept;
    const double spread2 = logistic->weights.dot(logistic->covariance * logistic->weights);
    if (!(spread2 > 0.0)) {
      truth.value = logit_entropy(center);
      truth.method = GroundTruthMethod::kClosedForm;
      truth.error_bound = std::numeric_limits<double>::epsilon();
      truth.evaluations = 1;
      return truth;
    }
    const double spread = std::sqrt(spread2);
    constexpr double kCut = 10.0;
    std::int64_t calls = 0;
    auto integrand = [&](double z) {
      ++calls;
      return std::exp(-0.5 * z * z - 0.5 * kLog2Pi) * logit_entropy(center + spread * z);
    };
    double error = 0.0;
    // Values are at most log 2 < 1, so a relative tolerance bounds the absolute error.
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, -kCut, kCut, 30, tolerance, &error);
    const double tail = 2.0 * normal_cdf(-kCut) * std::log(2.0);
    truth.value = std::clamp(value, 0.0, std::log(2.0));
    truth.method = GroundTruthMethod::kQuadrature;
    truth.error_bound = std::max(error, std::numeric_limits<double>::epsilon()) + tail;
    truth.evaluations = calls;
    return truth;
  }

  Engine engine = make_engine(kOracleSeed, {tag(StreamPurpose::kGroundTruth)});
  RunningMoments moments;
  constexpr std::int64_t kBatch = 10'000;
  while (moments.count < kMaxMonteCarloSamples) {
    const Dataset batch = model.sample(kBatch, engine);
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      moments.add(model.posterior_entropy(batch.features.row(i).transpose()));
    }
    if (moments.count >= 10 * kBatch && moments.standard_error() <= tolerance) break;
  }
  truth.value = std::clamp(moments.mean, 0.0, std::log(static_cast<double>(model.num_labels())));
  truth.method = GroundTruthMethod::kMonteCarlo;
  truth.error_bound = std::max(moments.standard_error(), std::numeric_limits<double>::min());
  truth.evaluations = moments.count;
  return truth;
}

Probability ball_label_probability(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                   int y, double t, double tolerance) {
  check_radius(t);
  check_tolerance(tolerance);
  const PreparedModel model(spec);
  check_point(model, x);
  check_label(model, y);
  const double reference = model.log_density(x);
  Probability out;

  if (model.dimension() == 1) {
    std::int64_t calls = 0;
    auto weight = [&](double u) {
      ++calls;
      Vector point(1);
      point(0) = u;
      return std::exp(model.log_density(point) - reference);
    };
    auto joint = [&](double u) {
      Vector point(1);
      point(0) = u;
      return weight(u) * model.posterior(point)(y);
    };
    using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
    double joint_error = 0.0;
    double mass_error = 0.0;
    const double relative = std::min(tolerance, 1e-3);
    const double numerator = Rule::integrate(joint, x(0) - t, x(0) + t, 30, relative, &joint_error);
    const double denominator = Rule::integrate(weight, x(0) - t, x(0) + t, 30, relative, &mass_error);
    out.value = std::clamp(numerator / denominator, 0.0, 1.0);
    out.error_bound = std::max((joint_error + out.value * mass_error) / denominator,
                               std::numeric_limits<double>::epsilon());
    out.evaluations = calls;
    return out;
  }

  // Ratio estimator with points uniform in the ball: E[f p_y] / E[f].
  Engine engine = make_engine(kOracleSeed, {tag(StreamPurpose::kBallProbability)});
  const Eigen::Index d = model.dimension();
  double sum_w = 0.0, sum_wp = 0.0, sum_w2 = 0.0, sum_w2p = 0.0, sum_w2p2 = 0.0;
  std::int64_t count = 0;
  double se = HUGE_VAL;
  while (count < kMaxMonteCarloSamples) {
    for (int b = 0; b < 10'000; ++b) {
      const double radius = t * std::pow(uniform_open01(engine), 1.0 / static_cast<double>(d));
      const Vector point = x + radius * unit_direction(d, engine);
      const double w = std::exp(model.log_density(point) - reference);
      const double p = model.posterior(point)(y);
      sum_w += w;
      sum_wp += w * p;
      sum_w2 += w * w;
      sum_w2p += w * w * p;
      sum_w2p2 += w * w * p * p;
      ++count;
    }
    const double ratio = sum_wp / sum_w;
    const double n = static_cast<double>(count);
    // Delta-method variance of the ratio: Var(w (p - R)) / (n E[w]^2).
    const double residual2 = (sum_w2p2 - 2.0 * ratio * sum_w2p + ratio * ratio * sum_w2) / n;
    se = std::sqrt(std::max(residual2, 0.0) / n) / (sum_w / n);
    if (count >= 100'000 && se <= tolerance) break;
  }
  out.value = std::clamp(sum_wp / sum_w, 0.0, 1.0);
  out.error_bound = std::max(se, std::numeric_limits<double>::min());
  out.evaluations = count;
  return out;
}

Probability sphere_label_probability(const ModelSpec& spec, const Eigen::Ref<const Vector>& x,
                                     int y, double t, double tolerance) {
  check_radius(t);
  check_tolerance(tolerance);
  const PreparedModel model(spec);
  check_point(model, x);
  check_label(model, y);
  const Eigen::Index d = model.dimension();
  const double reference = model.log_density(x);
  Probability out;

  auto accumulate = [&](const Vector& point, double& sum_w, double& sum_wp) {
    const double w = std::exp(model.log_density(point) - reference);
    sum_w += w;
    sum_wp += w * model.posterior(point)(y);
  };

  if (d == 1) {
    double sum_w = 0.0, sum_wp = 0.0;
    Vector point(1);
    point(0) = x(0) - t;
    accumulate(point, sum_w, sum_wp);
    point(0) = x(0) + t;
    accumulate(point, sum_w, sum_wp);
    out.value = std::clamp(sum_wp / sum_w, 0.0, 1.0);
    out.error_bound = std::numeric_limits<double>::epsilon();
    out.evaluations = 2;
    return out;
  }

  if (d == 2) {
    // Trapezoid rule on the circle; converges geometrically for smooth
    // periodic integrands, so doubling until two levels agree is a sound stop.
    double previous = -1.0;
    for (std::int64_t nodes = 64; nodes <= (1 << 20); nodes *= 2) {
      double sum_w = 0.0, sum_wp = 0.0;
      for (std::int64_t j = 0; j < nodes; ++j) {
        const double angle = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(nodes);
        Vector point(2);
        point << x(0) + t * std::cos(angle), x(1) + t * std::sin(angle);
        accumulate(point, sum_w, sum_wp);
      }
      out.evaluations += nodes;
      const double value = sum_wp / sum_w;
      if (previous >= 0.0 && std::abs(value - previous) <= tolerance) {
        out.value = std::clamp(value, 0.0, 1.0);
        out.error_bound = std::max(std::abs(value - previous), std::numeric_limits<double>::epsilon());
        return out;
      }
      previous = value;
    }
    out.value = std::clamp(previous, 0.0, 1.0);
    out.error_bound = tolerance;
    return out;
  }

  Engine engine = make_engine(kOracleSeed, {tag(StreamPurpose::kSphereProbability)});
  double sum_w = 0.0, sum_wp = 0.0, sum_w2 = 0.0, sum_w2p = 0.0, sum_w2p2 = 0.0;
  std::int64_t count = 0;
  double se = HUGE_VAL;
  while (count < kMaxMonteCarloSamples) {
    for (int b = 0; b < 10'000; ++b) {
      const Vector point = x + t * unit_direction(d, engine);
      const double w = std::exp(model.log_density(point) - reference);
      const double p = model.posterior(point)(y);
      sum_w += w;
      sum_wp += w * p;
      sum_w2 += w * w;
      sum_w2p += w * w * p;
      sum_w2p2 += w * w * p * p;
      ++count;
    }
    const double ratio = sum_wp / sum_w;
    const double n = static_cast<double>(count);
    const double residual2 = (sum_w2p2 - 2.0 * ratio * sum_w2p + ratio * ratio * sum_w2) / n;
    se = std::sqrt(std::max(residual2, 0.0) / n) / (sum_w / n);
    if (count >= 100'000 && se <= tolerance) break;
  }
  out.value = std::clamp(sum_wp / sum_w, 0.0, 1.0);
  out.error_bound = std::max(se, std::numeric_limits<double>::min());
  out.evaluations = count;
  return out;
}

DistanceLaw::DistanceLaw(const ModelSpec& spec, const Eigen::Ref<const Vector>& x)
    : model_(spec), center_(x) {
  check_point(model_, x);
  for (const Gaussian& g : model_.components()) exact_ = exact_ && g.isotropic();
  if (exact_) return;
  constexpr Eigen::Index kTableSize = 1'000'000;
  Engine engine = make_engine(kOracleSeed, {tag(StreamPurpose::kDistanceLaw)});
  const Dataset draws = model_.sample(kTableSize, engine);
  table_.resize(static_cast<std::size_t>(kTableSize));
  for (Eigen::Index i = 0; i < kTableSize; ++i) {
    table_[static_cast<std::size_t>(i)] = (draws.features.row(i).transpose() - center_).norm();
  }
  std::sort(table_.begin(), table_.end());
}

double DistanceLaw::cdf(double t) const {
  if (!(t > 0.0)) return 0.0;
  if (std::isinf(t)) return 1.0;
  if (!exact_) {
    const auto above = std::upper_bound(table_.begin(), table_.end(), t);
    return static_cast<double>(above - table_.begin()) / static_cast<double>(table_.size());
  }
  const double df = static_cast<double>(model_.dimension());
  double total = 0.0;
  for (std::size_t c = 0; c < model_.components().size(); ++c) {
    const Gaussian& g = model_.components()[c];
    const double weight = model_.component_weights()(static_cast<Eigen::Index>(c));
    const double sigma2 = g.isotropic_variance();
    double p = 0.0;
    if (model_.dimension() == 1) {
      const double sigma = std::sqrt(sigma2);
      const double offset = center_(0) - g.mean()(0);
      p = normal_cdf((offset + t) / sigma) - normal_cdf((offset - t) / sigma);
    } else {
      const double lambda = (center_ - g.mean()).squaredNorm() / sigma2;
      const double q = t * t / sigma2;
      p = lambda == 0.0
              ? boost::math::cdf(boost::math::chi_squared_distribution<double>(df), q)
              : boost::math::cdf(boost::math::non_central_chi_squared_distribution<double>(df, lambda), q);
    }
    total += weight * p;
  }
  return std::clamp(total, 0.0, 1.0);
}

double DistanceLaw::density(double t) const {
  if (!exact_) {
    throw InvalidInput("distance density needs isotropic covariances");
  }
  if (!(t > 0.0) || std::isinf(t)) return 0.0;
  const double df = static_cast<double>(model_.dimension());
  double total = 0.0;
  for (std::size_t c = 0; c < model_.components().size(); ++c) {
    const Gaussian& g = model_.components()[c];
    const double weight = model_.component_weights()(static_cast<Eigen::Index>(c));
    const double sigma2 = g.isotropic_variance();
    double f = 0.0;
    if (model_.dimension() == 1) {
      const double sigma = std::sqrt(sigma2);
      const double offset = center_(0) - g.mean()(0);
      auto phi = [](double z) { return std::exp(-0.5 * z * z - 0.5 * kLog2Pi); };
      f = (phi((offset + t) / sigma) + phi((offset - t) / sigma)) / sigma;
    } else {
      const double lambda = (center_ - g.mean()).squaredNorm() / sigma2;
      const double q = t * t / sigma2;
      const double pdf =
          lambda == 0.0
              ? boost::math::pdf(boost::math::chi_squared_distribution<double>(df), q)
              : boost::math::pdf(boost::math::non_central_chi_squared_distribution<double>(df, lambda), q);
      f = pdf * 2.0 * t / sigma2;
    }
    total += weight * f;
  }
  return total;
}

}  // namespace mixent
