#pragma once

#include <vector>

#include "mixent/kd_tree.hpp"
#include "mixent/types.hpp"

namespace mixent {

using SpatialIndex = KdTree<double>;

/// Builds an exact k-NN index over a copy of `points`. Throws InvalidInput for
/// fewer than two points or a non-finite coordinate.
SpatialIndex build_index(const PointSet& points,
                         Eigen::Index leaf_capacity = SpatialIndex::kDefaultLeafCapacity);

/// Distance from point i to its k-th nearest other point (1 <= k <= n-1).
double kth_neighbor_distance(const SpatialIndex& index, Eigen::Index i, Eigen::Index k);

/// Squared form of kth_neighbor_distance; ball queries compare against this
/// value directly so no rounding is introduced by sqrt.
double kth_neighbor_squared_distance(const SpatialIndex& index, Eigen::Index i,
                                     Eigen::Index k);

/// Ids j != i with ||X_i - X_j|| <= radius, ascending.
std::vector<Eigen::Index> neighbors_within(const SpatialIndex& index, Eigen::Index i,
                                           double radius);

}  // namespace mixent
