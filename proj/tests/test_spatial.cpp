#include <doctest.h>

#include <random>

#include "mixent/errors.hpp"
#include "mixent/spatial.hpp"
#include "support/brute_force.hpp"

using namespace mixent;

namespace {

PointSet line(std::initializer_list<double> values) {
  PointSet x(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (const double v : values) x(i++, 0) = v;
  return x;
}

PointSet gaussian_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> normal;
  PointSet x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) x(i, c) = normal(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("build_index validates its input") {
  CHECK(build_index(line({0.0, 1.0}), 16).size() == 2);
  CHECK_THROWS_AS(build_index(line({0.0})), InvalidInput);
  CHECK_THROWS_AS(build_index(line({0.0, std::nan("")})), InvalidInput);
  CHECK_THROWS_AS(build_index(line({0.0, HUGE_VAL})), InvalidInput);
  CHECK_THROWS_AS(build_index(line({0.0, 1.0}), 0), InvalidInput);
  CHECK_THROWS_AS(build_index(PointSet(3, 0)), InvalidInput);
}

TEST_CASE("hand fixtures") {
  CHECK(kth_neighbor_distance(build_index(line({0.0, 3.0})), 0, 1) == 3.0);

  const SpatialIndex index = build_index(line({0.0, 1.0, 2.5, 10.0}));
  CHECK(kth_neighbor_distance(index, 0, 2) == 2.5);
  CHECK(neighbors_within(index, 0, 2.5) == std::vector<Eigen::Index>{1, 2});
  CHECK(neighbors_within(index, 0, 0.0).empty());
  CHECK(neighbors_within(index, 3, 100.0) == std::vector<Eigen::Index>{0, 1, 2});
}

TEST_CASE("query arguments are validated") {
  const SpatialIndex index = build_index(line({0.0, 1.0, 2.5}));
  CHECK_THROWS_AS(kth_neighbor_distance(index, 0, 0), InvalidInput);
  CHECK_THROWS_AS(kth_neighbor_distance(index, 0, 3), InvalidInput);
  CHECK_THROWS_AS(kth_neighbor_distance(index, 3, 1), InvalidInput);
  CHECK_THROWS_AS(kth_neighbor_distance(index, -1, 1), InvalidInput);
  CHECK_THROWS_AS(neighbors_within(index, 0, -1.0), InvalidInput);
  CHECK_THROWS_AS(neighbors_within(index, 0, HUGE_VAL), InvalidInput);
  CHECK_THROWS_AS(neighbors_within(index, 0, std::nan("")), InvalidInput);
}

TEST_CASE("k-NN distances match the brute-force oracle bit for bit") {
  std::mt19937_64 rng(11);
  SUBCASE("1000 points in R^5") {
    const PointSet x = gaussian_points(rng, 1000, 5);
    const SpatialIndex index = build_index(x);
    CHECK(index.uses_tree());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto sorted = oracle::sorted_neighbors(x, i);
      for (const Eigen::Index k : {1, 5, 20}) {
        REQUIRE(kth_neighbor_distance(index, i, k) == sorted[static_cast<std::size_t>(k - 1)].first);
      }
    }
  }
  SUBCASE("500 points in R^3, every i, k in {1,3,7}") {
    const PointSet x = gaussian_points(rng, 500, 3);
    for (const Eigen::Index leaf : {1, 4, 32}) {
      const SpatialIndex index = build_index(x, leaf);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (const Eigen::Index k : {1, 3, 7}) {
          REQUIRE(kth_neighbor_distance(index, i, k) == oracle::kth_distance(x, i, k));
        }
      }
    }
  }
  SUBCASE("high dimension uses the linear scan") {
    const PointSet x = gaussian_points(rng, 200, 25);
    const SpatialIndex index = build_index(x);
    CHECK_FALSE(index.uses_tree());
    for (Eigen::Index i = 0; i < x.rows(); i += 7) {
      REQUIRE(kth_neighbor_distance(index, i, 4) == oracle::kth_distance(x, i, 4));
    }
  }
}

TEST_CASE("range queries match the linear-scan oracle") {
  std::mt19937_64 rng(12);
  const PointSet x = gaussian_points(rng, 500, 4);
  const SpatialIndex index = build_index(x);
  std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
  std::uniform_real_distribution<double> radius(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index i = pick(rng);
    const double r = radius(rng);
    REQUIRE(neighbors_within(index, i, r) == oracle::within(x, i, r));
  }
  // Radii that land exactly on a data distance.
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double r = oracle::kth_distance(x, i, 6);
    REQUIRE(neighbors_within(index, i, r) == oracle::within(x, i, r));
  }
}

TEST_CASE("monotone in k and consistent with the closed ball") {
  std::mt19937_64 rng(13);
  const PointSet x = gaussian_points(rng, 300, 2);
  const SpatialIndex index = build_index(x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double previous = 0.0;
    for (Eigen::Index k = 1; k <= 15; ++k) {
      const double rho = kth_neighbor_distance(index, i, k);
      REQUIRE(rho >= previous);
      previous = rho;
      // continuous data: distances from i are distinct
      REQUIRE(neighbors_within(index, i, rho).size() == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("ties go to the smaller id and the closed ball keeps all of them") {
  // Points 1..4 are all at distance 1 from point 0.
  PointSet x(5, 2);
  x << 0, 0, 1, 0, 0, 1, -1, 0, 0, -1;
  const SpatialIndex index = build_index(x, 1);
  const auto nearest = index.nearest(x.row(0), 2, 0);
  REQUIRE(nearest.size() == 2);
  CHECK(nearest[0].id == 1);
  CHECK(nearest[1].id == 2);
  CHECK(kth_neighbor_distance(index, 0, 2) == 1.0);
  CHECK(neighbors_within(index, 0, 1.0).size() == 4);
}

TEST_CASE("permuting ids permutes the answers") {
  std::mt19937_64 rng(14);
  const PointSet x = gaussian_points(rng, 200, 3);
  std::vector<Eigen::Index> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PointSet y(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i) y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const SpatialIndex a = build_index(x);
  const SpatialIndex b = build_index(y);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const Eigen::Index original = perm[static_cast<std::size_t>(i)];
    REQUIRE(kth_neighbor_distance(b, i, 5) == kth_neighbor_distance(a, original, 5));
    const double r = kth_neighbor_distance(a, original, 5);
    std::vector<Eigen::Index> mapped;
    for (const Eigen::Index j : neighbors_within(b, i, r)) mapped.push_back(perm[static_cast<std::size_t>(j)]);
    std::sort(mapped.begin(), mapped.end());
    REQUIRE(mapped == neighbors_within(a, original, r));
  }
}

TEST_CASE("construction leaves the input untouched") {
  std::mt19937_64 rng(15);
  const PointSet x = gaussian_points(rng, 100, 3);
  const PointSet copy = x;
  const SpatialIndex index = build_index(x, 2);
  CHECK(x == copy);
  CHECK(index.points() == x);
}
