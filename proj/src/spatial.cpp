#include "mixent/spatial.hpp"

#include <cmath>
#include <string>

namespace mixent {

namespace {

void check_point_id(const SpatialIndex& index, Eigen::Index i) {
  if (i < 0 || i >= index.size()) {
    throw InvalidInput("point id " + std::to_string(i) + " out of range [0, " +
                       std::to_string(index.size()) + ")");
  }
}

}  // namespace

SpatialIndex build_index(const PointSet& points, Eigen::Index leaf_capacity) {
  return SpatialIndex(points, leaf_capacity);
}

double kth_neighbor_squared_distance(const SpatialIndex& index, Eigen::Index i,
                                     Eigen::Index k) {
  check_point_id(index, i);
  if (k < 1 || k > index.size() - 1) {
    throw InvalidInput("neighbor rank k=" + std::to_string(k) +
                       " outside [1, " + std::to_string(index.size() - 1) + "]");
  }
  const auto neighbors = index.nearest(index.points().row(i), k, i);
  return neighbors.back().squared_distance;
}

double kth_neighbor_distance(const SpatialIndex& index, Eigen::Index i, Eigen::Index k) {
  return std::sqrt(kth_neighbor_squared_distance(index, i, k));
}

std::vector<Eigen::Index> neighbors_within(const SpatialIndex& index, Eigen::Index i,
                                           double radius) {
  check_point_id(index, i);
  if (!std::isfinite(radius) || radius < 0.0) {
    throw InvalidInput("radius must be finite and nonnegative");
  }
  // Membership is decided on the distance itself; the squared bound only
  // prunes cells and is padded so rounding in radius * radius cannot cut a
  // boundary point.
  const double prune = std::nextafter(radius * radius, HUGE_VAL) * (1.0 + 1e-12);
  return index.within_if(index.points().row(i), prune, i,
                         [radius](double sq) { return std::sqrt(sq) <= radius; });
}

}  // namespace mixent
