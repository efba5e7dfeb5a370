#include <doctest.h>

#include <cmath>

#include "mixent/errors.hpp"
#include "mixent/models.hpp"
#include "mixent/random.hpp"

using namespace mixent;

namespace {

// Reference values computed once with scipy (adaptive quadrature) and
// cross-checked by independent Monte Carlo; see README.
constexpr double kTruthW4 = 0.290851683820546;      // d=1, a=0, s=1, w=4, b=0
constexpr double kTruthW4Mc = 0.2907711484;         // 1e7 draws
constexpr double kTruthW4McSe = 7.68e-05;
constexpr double kTruthD3 = 0.523242576553127;      // w=(1,-1,0.5), b=0.3
constexpr double kBallW4 = 0.863263037757229;       // x=0.5, t=0.25, y=1, quadrature
constexpr double kBallW4Rejection = 0.863053;       // 4e6 proposals, 699227 accepted
constexpr double kBallW4RejectionSe = 0.00041;
constexpr double kSphereW4 = 0.828043291047814;     // x=0.5, t=0.25, two-point formula

ClassGaussianSpec two_classes_1d(double p0, double m0, double m1) {
  ClassGaussianSpec spec;
  spec.priors = Vector(2);
  spec.priors << p0, 1.0 - p0;
  spec.means = {Vector::Constant(1, m0), Vector::Constant(1, m1)};
  spec.covariances = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  return spec;
}

Vector point(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double value : values) v(i++) = value;
  return v;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_NOTHROW(validate_model(logistic_model(Vector::Ones(2), 0.0)));
  LogisticGaussianSpec bad = logistic_model(Vector::Ones(2), 0.0);
  bad.covariance(0, 1) = 2.0;
  bad.covariance(1, 0) = 2.0;
  CHECK_THROWS_AS(validate_model(bad), InvalidInput);
  bad = logistic_model(Vector::Ones(2), std::nan(""));
  CHECK_THROWS_AS(validate_model(bad), InvalidInput);
  bad = logistic_model(Vector::Ones(2), 0.0);
  bad.weights = Vector::Ones(3);
  CHECK_THROWS_AS(validate_model(bad), InvalidInput);

  ClassGaussianSpec classes = two_classes_1d(0.5, -1, 1);
  CHECK_NOTHROW(validate_model(classes));
  classes.priors << 0.6, 0.6;
  CHECK_THROWS_AS(validate_model(classes), InvalidInput);
  classes.priors << 1.0, 0.0;
  CHECK_THROWS_AS(validate_model(classes), InvalidInput);
  classes = two_classes_1d(0.5, -1, 1);
  classes.covariances[1](0, 0) = -1.0;
  CHECK_THROWS_AS(validate_model(classes), InvalidInput);
}

TEST_CASE("posterior") {
  const ModelSpec null = logistic_model(Vector::Zero(2), 0.0);
  CHECK(posterior(null, point({3.0, -7.0})) == Vector::Constant(2, 0.5));

  const ModelSpec unit = logistic_model(Vector::Ones(1), 0.0);
  CHECK(posterior(unit, point({0.0}))(0) == 0.5);
  CHECK(posterior(unit, point({800.0}))(0) == 1.0);
  CHECK(posterior(unit, point({-800.0}))(0) == 0.0);
  CHECK(posterior(unit, point({1.0}))(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));

  const ModelSpec symmetric = two_classes_1d(0.5, -1, 1);
  const Vector p = posterior(symmetric, point({0.0}));
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-15));
  // Bayes rule by hand at x = 0.5 with priors (0.3, 0.7)
  const ModelSpec skew = two_classes_1d(0.3, -1, 1);
  const double a = 0.3 * std::exp(-0.5 * 1.5 * 1.5);
  const double b = 0.7 * std::exp(-0.5 * 0.5 * 0.5);
  CHECK(posterior(skew, point({0.5}))(0) == doctest::Approx(a / (a + b)).epsilon(1e-14));
}

TEST_CASE("posterior sums to one far from the data") {
  ClassGaussianSpec three;
  three.priors = Vector::Constant(3, 1.0 / 3.0);
  three.priors(2) = 1.0 - 2.0 / 3.0;
  three.means = {point({0, 0}), point({3, 1}), point({-2, 4})};
  Matrix skew(2, 2);
  skew << 2.0, 0.3, 0.3, 0.5;
  three.covariances = {Matrix::Identity(2, 2), skew, 0.1 * Matrix::Identity(2, 2)};
  const ModelSpec logistic = logistic_model(point({1.5, -2.0}), 0.7);
  Engine engine = make_engine(3, {99});
  for (const double scale : {1.0, 1e2, 1e4, 1e6}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vector x = scale * point({standard_normal(engine), standard_normal(engine)});
      for (const ModelSpec& spec : {ModelSpec(three), logistic}) {
        const Vector p = posterior(spec, x);
        REQUIRE(p.allFinite());
        REQUIRE((p.array() >= 0.0).all());
        REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("sampling") {
  const ModelSpec null = logistic_model(Vector::Zero(2), 0.0);
  const Dataset a = sample(null, 10000, 5);
  const Dataset b = sample(null, 10000, 5);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.label_names == std::vector<std::string>{"1", "2"});
  const double ones = static_cast<double>((a.labels.array() == 0).count());
  CHECK(std::abs(ones / 10000.0 - 0.5) <= 3.0 * std::sqrt(0.25 / 10000.0));
  CHECK(sample(null, 100, 6).features != a.features.topRows(100));
  CHECK_THROWS_AS(sample(null, 1, 5), InvalidInput);

  ClassGaussianSpec classes = two_classes_1d(0.7, -2.0, 3.0);
  classes.covariances[1](0, 0) = 4.0;
  const Dataset c = sample(classes, 10000, 8);
  double count0 = 0.0, sum0 = 0.0, sum1 = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c.labels(i) == 0) {
      ++count0;
      sum0 += c.features(i, 0);
    } else {
      sum1 += c.features(i, 0);
    }
  }
  const double count1 = 10000.0 - count0;
  CHECK(std::abs(count0 / 10000.0 - 0.7) <= 3.0 * std::sqrt(0.21 / 10000.0));
  CHECK(std::abs(sum0 / count0 + 2.0) <= 3.0 / std::sqrt(count0));
  CHECK(std::abs(sum1 / count1 - 3.0) <= 3.0 * 2.0 / std::sqrt(count1));
}

TEST_CASE("logistic sampling follows the sigmoid") {
  // Correlated covariance and a nonzero mean: check E[X] and P(Y=1).
  LogisticGaussianSpec spec = logistic_model(point({1.0, -1.0}), 0.3);
  spec.mean = point({0.5, -0.25});
  spec.covariance << 1.0, 0.6, 0.6, 2.0;
  const Dataset data = sample(spec, 40000, 21);
  const Vector mean = data.features.colwise().mean().transpose();
  CHECK(std::abs(mean(0) - 0.5) <= 4.0 * std::sqrt(1.0 / 40000.0));
  CHECK(std::abs(mean(1) + 0.25) <= 4.0 * std::sqrt(2.0 / 40000.0));
  double expected = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    expected += posterior(spec, data.features.row(i).transpose())(0);
  }
  const double observed = static_cast<double>((data.labels.array() == 0).count());
  CHECK(std::abs(observed - expected) <= 4.0 * std::sqrt(0.25 * 40000.0));
}

TEST_CASE("ground truth: closed forms and quadrature") {
  const GroundTruth null = true_conditional_entropy(logistic_model(Vector::Zero(3), 0.0));
  CHECK(null.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(null.value - std::log(2.0)) <= 1e-8);
  CHECK(null.method == GroundTruthMethod::kClosedForm);

  const GroundTruth biased = true_conditional_entropy(logistic_model(Vector::Zero(1), std::log(3.0)));
  CHECK(biased.value == doctest::Approx(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25))).epsilon(1e-14));
  CHECK(biased.value == doctest::Approx(0.562335).epsilon(1e-6));

  const GroundTruth w4 = true_conditional_entropy(logistic_model(Vector::Constant(1, 4.0), 0.0), 1e-8);
  CHECK(w4.method == GroundTruthMethod::kQuadrature);
  CHECK(std::abs(w4.value - kTruthW4) <= 1e-8);
  CHECK(std::abs(w4.value - kTruthW4Mc) <= 3.0 * kTruthW4McSe);
  CHECK(w4.error_bound > 0.0);
  CHECK(w4.error_bound <= 1e-8);

  const GroundTruth d3 = true_conditional_entropy(logistic_model(point({1.0, -1.0, 0.5}), 0.3));
  CHECK(std::abs(d3.value - kTruthD3) <= 1e-8);

  CHECK_THROWS_AS(true_conditional_entropy(logistic_model(Vector::Ones(1), 0.0), 0.0), InvalidInput);
  CHECK_THROWS_AS(true_conditional_entropy(logistic_model(Vector::Ones(1), 0.0), -1.0), InvalidInput);
}

TEST_CASE("logistic reduction agrees with full-dimensional Monte Carlo") {
  LogisticGaussianSpec spec = logistic_model(point({0.8, -1.2, 0.4}), -0.2);
  spec.mean = point({0.3, 0.1, -0.5});
  spec.covariance << 1.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 0.7;
  const GroundTruth truth = true_conditional_entropy(spec);
  const PreparedModel model(spec);
  Engine engine = make_engine(77, {1});
  const Dataset draws = model.sample(400000, engine);
  double sum = 0.0, sum2 = 0.0;
  for (Eigen::Index i = 0; i < draws.size(); ++i) {
    const double h = model.posterior_entropy(draws.features.row(i).transpose());
    sum += h;
    sum2 += h * h;
  }
  const double n = static_cast<double>(draws.size());
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - truth.value) <= 3.0 * se);
}

TEST_CASE("ground truth: class-Gaussian Monte Carlo") {
  const ModelSpec symmetric = two_classes_1d(0.5, -1.0, 1.0);
  const GroundTruth truth = true_conditional_entropy(symmetric, 1e-3);
  CHECK(truth.method == GroundTruthMethod::kMonteCarlo);
  CHECK(truth.error_bound > 0.0);
  CHECK(truth.error_bound <= 1e-3);
  // The posterior of class 0 is sigmoid(-2x) with X a symmetric mixture, so the
  // same quadrature as a logistic model with w=2 applied to each component.
  // Check it lies between 0 and log 2 and repeats exactly.
  CHECK(truth.value > 0.0);
  CHECK(truth.value < std::log(2.0));
  CHECK(true_conditional_entropy(symmetric, 1e-3).value == truth.value);

  // Identical classes: posterior equals the prior.
  ClassGaussianSpec same = two_classes_1d(0.25, 0.0, 0.0);
  const GroundTruth prior = true_conditional_entropy(same, 1e-3);
  CHECK(prior.value == doctest::Approx(-(0.25 * std::log(0.25) + 0.75 * std::log(0.75))).epsilon(1e-12));
}

TEST_CASE("ball probability") {
  const ModelSpec null = logistic_model(Vector::Zero(2), 0.0);
  CHECK(ball_label_probability(null, point({1.0, 2.0}), 0, 0.7).value == doctest::Approx(0.5).epsilon(1e-12));
  const ModelSpec biased = logistic_model(Vector::Zero(1), std::log(3.0));
  CHECK(ball_label_probability(biased, point({-0.4}), 0, 2.0).value == doctest::Approx(0.75).epsilon(1e-12));

  const ModelSpec w4 = logistic_model(Vector::Constant(1, 4.0), 0.0);
  const Probability ball = ball_label_probability(w4, point({0.5}), 0, 0.25);
  CHECK(std::abs(ball.value - kBallW4) <= 1e-6);
  CHECK(std::abs(ball.value - kBallW4Rejection) <= 3.0 * kBallW4RejectionSe);
  CHECK(ball_label_probability(w4, point({0.5}), 1, 0.25).value == doctest::Approx(1.0 - ball.value).epsilon(1e-9));

  CHECK_THROWS_AS(ball_label_probability(w4, point({0.5}), 0, 0.0), InvalidInput);
  CHECK_THROWS_AS(ball_label_probability(w4, point({0.5}), 0, -1.0), InvalidInput);
  CHECK_THROWS_AS(ball_label_probability(w4, point({0.5}), 2, 1.0), InvalidInput);
}

TEST_CASE("ball probability in 2-d matches rejection sampling") {
  const ModelSpec spec = logistic_model(point({2.0, -1.0}), 0.5);
  const Vector x = point({0.3, 0.2});
  const double t = 0.6;
  const Probability ball = ball_label_probability(spec, x, 0, t, 1e-4);
  const PreparedModel model(spec);
  Engine engine = make_engine(31, {2});
  double hits = 0.0, ones = 0.0;
  const Dataset draws = model.sample(2000000, engine);
  for (Eigen::Index i = 0; i < draws.size(); ++i) {
    if ((draws.features.row(i).transpose() - x).norm() <= t) {
      ++hits;
      ones += draws.labels(i) == 0;
    }
  }
  const double estimate = ones / hits;
  const double se = std::sqrt(estimate * (1.0 - estimate) / hits);
  CHECK(std::abs(ball.value - estimate) <= 3.0 * se + 3.0 * ball.error_bound);
}

TEST_CASE("ball probability tends to the posterior as t shrinks") {
  const ModelSpec w4 = logistic_model(Vector::Constant(1, 4.0), 0.0);
  const double target = posterior(w4, point({0.5}))(0);
  double previous = HUGE_VAL;
  for (const double t : {0.1, 0.01, 0.001}) {
    const double gap = std::abs(ball_label_probability(w4, point({0.5}), 0, t, 1e-10).value - target);
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous < 1e-5);

  const ModelSpec planar = logistic_model(point({1.0, 1.0}), 0.0);
  const double planar_target = posterior(planar, point({0.2, 0.1}))(0);
  const double wide = std::abs(ball_label_probability(planar, point({0.2, 0.1}), 0, 1.0, 1e-4).value - planar_target);
  const double narrow = std::abs(ball_label_probability(planar, point({0.2, 0.1}), 0, 0.01, 1e-4).value - planar_target);
  CHECK(narrow < wide);
}

TEST_CASE("sphere probability") {
  const ModelSpec null = logistic_model(Vector::Zero(3), 0.0);
  CHECK(sphere_label_probability(null, point({1.0, 0.0, -1.0}), 0, 0.5).value == doctest::Approx(0.5).epsilon(1e-12));

  const ModelSpec w4 = logistic_model(Vector::Constant(1, 4.0), 0.0);
  for (const double t : {0.1, 1.0, 3.0}) {
    CHECK(sphere_label_probability(w4, point({0.0}), 0, t).value == doctest::Approx(0.5).epsilon(1e-14));
  }
  const Probability sphere = sphere_label_probability(w4, point({0.5}), 0, 0.25);
  CHECK(sphere.value == doctest::Approx(kSphereW4).epsilon(1e-13));

  // Thin-shell Monte Carlo: keep draws with | |X - x| - t | < 5e-4.
  const PreparedModel model(w4);
  Engine engine = make_engine(41, {3});
  double kept = 0.0, ones = 0.0;
  const Dataset draws = model.sample(4000000, engine);
  for (Eigen::Index i = 0; i < draws.size(); ++i) {
    if (std::abs(std::abs(draws.features(i, 0) - 0.5) - 0.25) < 5e-4) {
      ++kept;
      ones += draws.labels(i) == 0;
    }
  }
  const double estimate = ones / kept;
  CHECK(std::abs(sphere.value - estimate) <= 3.0 * std::sqrt(estimate * (1 - estimate) / kept));
}

TEST_CASE("sphere probability in 2-d and 3-d against thin shells") {
  for (const Eigen::Index d : {2, 3}) {
    const ModelSpec spec = logistic_model(Vector::LinSpaced(d, 1.0, -1.0), 0.2);
    const Vector x = Vector::Constant(d, 0.3);
    const double t = 0.8;
    const Probability sphere = sphere_label_probability(spec, x, 0, t, 1e-4);
    const PreparedModel model(spec);
    Engine engine = make_engine(43, {static_cast<std::uint64_t>(d)});
    double kept = 0.0, ones = 0.0;
    const Dataset draws = model.sample(3000000, engine);
    for (Eigen::Index i = 0; i < draws.size(); ++i) {
      if (std::abs((draws.features.row(i).transpose() - x).norm() - t) < 1e-3) {
        ++kept;
        ones += draws.labels(i) == 0;
      }
    }
    const double estimate = ones / kept;
    CHECK(std::abs(sphere.value - estimate) <= 3.0 * std::sqrt(estimate * (1 - estimate) / kept) + 3.0 * sphere.error_bound);
  }
}

TEST_CASE("distance law") {
  const ModelSpec gauss1 = logistic_model(Vector::Zero(1), 0.0);
  const DistanceLaw law1(gauss1, point({0.0}));
  CHECK(law1.exact());
  CHECK(law1.cdf(1.0) == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-14));
  CHECK(law1.cdf(0.0) == 0.0);
  CHECK(law1.cdf(HUGE_VAL) == 1.0);
  CHECK(law1.density(0.5) == doctest::Approx(2.0 * std::exp(-0.125) / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

  const ModelSpec gauss2 = logistic_model(Vector::Zero(2), 0.0);
  const DistanceLaw law2(gauss2, point({0.0, 0.0}));
  // Rayleigh
  CHECK(law2.cdf(1.3) == doctest::Approx(1.0 - std::exp(-0.5 * 1.69)).epsilon(1e-12));
  CHECK(law2.density(1.3) == doctest::Approx(1.3 * std::exp(-0.5 * 1.69)).epsilon(1e-12));

  // Off-center in 2-d: noncentral law against direct Monte Carlo.
  const DistanceLaw shifted(gauss2, point({1.0, -0.5}));
  const PreparedModel model(gauss2);
  Engine engine = make_engine(55, {4});
  const Dataset draws = model.sample(200000, engine);
  double below = 0.0;
  for (Eigen::Index i = 0; i < draws.size(); ++i) {
    below += (draws.features.row(i).transpose() - point({1.0, -0.5})).norm() <= 1.2;
  }
  const double p = shifted.cdf(1.2);
  CHECK(std::abs(below / 200000.0 - p) <= 4.0 * std::sqrt(p * (1 - p) / 200000.0));

  LogisticGaussianSpec correlated = logistic_model(Vector::Zero(2), 0.0);
  correlated.covariance << 1.0, 0.5, 0.5, 1.0;
  const DistanceLaw table(correlated, point({0.0, 0.0}));
  CHECK_FALSE(table.exact());
  CHECK_THROWS_AS(table.density(1.0), InvalidInput);
  CHECK(table.cdf(1e6) == 1.0);
}
