#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mixent/errors.hpp"
#include "mixent/types.hpp"

namespace mixent {

/// Squared Euclidean distance, accumulated coordinate by coordinate in
/// ascending dimension order. Every exact query in this library goes through
/// this function so that indexed and brute-force answers agree bit for bit.
template <typename DerivedA, typename DerivedB>
inline typename DerivedA::Scalar squared_distance(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Scalar sum(0);
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const Scalar diff = a(j) - b(j);
    sum += diff * diff;
  }
  return sum;
}

/**
 * Exact k-d tree over an immutable point set.
 *
 * Neighbors are ordered by (squared distance, point id), so when several
 * points share the k-th distance the one with the smallest id is the k-th
 * neighbor. Pruning only discards a cell whose lower-bound distance is
 * strictly greater than the current candidate bound, which keeps the answers
 * identical to a linear scan. Above `kMaxTreeDimension` the tree is not built
 * and every query is a linear scan.
 */
template <typename Scalar>
class KdTree {
 public:
  using Index = Eigen::Index;
  using Points = PointMatrix<Scalar>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  static constexpr Index kDefaultLeafCapacity = 32;
  static constexpr Index kMaxTreeDimension = 20;

  struct Neighbor {
    Scalar squared_distance;
    Index id;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
      return a.squared_distance < b.squared_distance ||
             (a.squared_distance == b.squared_distance && a.id < b.id);
    }
  };

  explicit KdTree(Points points, Index leaf_capacity = kDefaultLeafCapacity)
      : points_(std::move(points)), leaf_capacity_(leaf_capacity) {
    if (points_.rows() < 2) {
      throw InvalidInput("spatial index needs at least 2 points, got " +
                         std::to_string(points_.rows()));
    }
    if (points_.cols() < 1) {
      throw InvalidInput("spatial index needs dimension >= 1");
    }
    if (leaf_capacity_ < 1) {
      throw InvalidInput("leaf capacity must be positive");
    }
    for (Index i = 0; i < points_.rows(); ++i) {
      for (Index j = 0; j < points_.cols(); ++j) {
        if (!std::isfinite(static_cast<double>(points_(i, j)))) {
          throw InvalidInput("non-finite coordinate at point " +
                             std::to_string(i) + ", dimension " +
                             std::to_string(j));
        }
      }
    }
    order_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(order_.begin(), order_.end(), Index{0});
    if (points_.cols() <= kMaxTreeDimension) {
      build(0, points_.rows());
    }
  }

  Index size() const { return points_.rows(); }
  Index dimension() const { return points_.cols(); }
  Index leaf_capacity() const { return leaf_capacity_; }
  bool uses_tree() const { return !nodes_.empty(); }
  const Points& points() const { return points_; }

  /// The k nearest points to `query`, skipping point `exclude` (pass -1 to
  /// keep every point), sorted by (distance, id).
  std::vector<Neighbor> nearest(const Eigen::Ref<const RowVector>& query,
                                Index k, Index exclude = -1) const {
    std::priority_queue<Neighbor> heap;
    if (k <= 0) return {};
    if (uses_tree()) {
      nearest_recursive(0, query, k, exclude, heap);
    } else {
      for (Index i = 0; i < size(); ++i) {
        if (i != exclude) offer(heap, k, {squared_distance(query, points_.row(i)), i});
      }
    }
    std::vector<Neighbor> out(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      *it = heap.top();
      heap.pop();
    }
    return out;
  }

  /// Ids of all points with squared distance <= `squared_radius` from
  /// `query`, skipping `exclude`, in ascending id order.
  std::vector<Index> within(const Eigen::Ref<const RowVector>& query,
                            Scalar squared_radius, Index exclude = -1) const {
    return within_if(query, squared_radius, exclude,
                     [squared_radius](Scalar sq) { return sq <= squared_radius; });
  }

  /// Ids of points whose squared distance passes `accept`, ascending. Cells
  /// farther than `prune_squared_radius` are skipped, so `accept` must reject
  /// every squared distance above that bound.
  template <typename Accept>
  std::vector<Index> within_if(const Eigen::Ref<const RowVector>& query,
                               Scalar prune_squared_radius, Index exclude,
                               Accept accept) const {
    std::vector<Index> out;
    if (uses_tree()) {
      within_recursive(0, query, prune_squared_radius, exclude, accept, out);
      std::sort(out.begin(), out.end());
    } else {
      for (Index i = 0; i < size(); ++i) {
        if (i != exclude && accept(squared_distance(query, points_.row(i)))) {
          out.push_back(i);
        }
      }
    }
    return out;
  }

 private:
  struct Node {
    Index begin;
    Index end;
    Index left = -1;
    Index right = -1;
    bool leaf() const { return left < 0; }
  };

  Index build(Index begin, Index end) {
    const Index node_id = static_cast<Index>(nodes_.size());
    nodes_.push_back({begin, end});
    RowVector lo = points_.row(order_[static_cast<std::size_t>(begin)]);
    RowVector hi = lo;
    for (Index p = begin + 1; p < end; ++p) {
      const auto row = points_.row(order_[static_cast<std::size_t>(p)]);
      lo = lo.cwiseMin(row);
      hi = hi.cwiseMax(row);
    }
    lower_.push_back(lo);
    upper_.push_back(hi);

    Index split_dim = 0;
    (hi - lo).maxCoeff(&split_dim);
    if (end - begin <= leaf_capacity_ || hi(split_dim) == lo(split_dim)) {
      return node_id;
    }
    const Index mid = begin + (end - begin) / 2;
    auto first = order_.begin() + begin;
    std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                     [&](Index a, Index b) {
                       const Scalar va = points_(a, split_dim);
                       const Scalar vb = points_(b, split_dim);
                       return va < vb || (va == vb && a < b);
                     });
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    nodes_[static_cast<std::size_t>(node_id)].left = left;
    nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  // Lower bound on the squared distance from query to any point of the cell.
  // Rounded subtraction and squaring are monotone, so this never exceeds the
  // value squared_distance() computes for a point inside the box.
  Scalar box_distance(Index node, const Eigen::Ref<const RowVector>& query) const {
    const RowVector& lo = lower_[static_cast<std::size_t>(node)];
    const RowVector& hi = upper_[static_cast<std::size_t>(node)];
    Scalar sum(0);
    for (Index j = 0; j < query.size(); ++j) {
      Scalar diff(0);
      if (query(j) < lo(j)) {
        diff = lo(j) - query(j);
      } else if (query(j) > hi(j)) {
        diff = query(j) - hi(j);
      }
      sum += diff * diff;
    }
    return sum;
  }

  static void offer(std::priority_queue<Neighbor>& heap, Index k, Neighbor candidate) {
    if (static_cast<Index>(heap.size()) < k) {
      heap.push(candidate);
    } else if (candidate < heap.top()) {
      heap.pop();
      heap.push(candidate);
    }
  }

  void nearest_recursive(Index node_id, const Eigen::Ref<const RowVector>& query,
                         Index k, Index exclude,
                         std::priority_queue<Neighbor>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.leaf()) {
      for (Index p = node.begin; p < node.end; ++p) {
        const Index id = order_[static_cast<std::size_t>(p)];
        if (id != exclude) offer(heap, k, {squared_distance(query, points_.row(id)), id});
      }
      return;
    }
    const Scalar dl = box_distance(node.left, query);
    const Scalar dr = box_distance(node.right, query);
    const bool left_first = dl <= dr;
    const Index near = left_first ? node.left : node.right;
    const Index far = left_first ? node.right : node.left;
    const Scalar d_near = left_first ? dl : dr;
    const Scalar d_far = left_first ? dr : dl;
    auto full = [&] { return static_cast<Index>(heap.size()) >= k; };
    if (!full() || d_near <= heap.top().squared_distance) {
      nearest_recursive(near, query, k, exclude, heap);
    }
    if (!full() || d_far <= heap.top().squared_distance) {
      nearest_recursive(far, query, k, exclude, heap);
    }
  }

  template <typename Accept>
  void within_recursive(Index node_id, const Eigen::Ref<const RowVector>& query,
                        Scalar prune_squared_radius, Index exclude, Accept& accept,
                        std::vector<Index>& out) const {
    if (box_distance(node_id, query) > prune_squared_radius) return;
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.leaf()) {
      for (Index p = node.begin; p < node.end; ++p) {
        const Index id = order_[static_cast<std::size_t>(p)];
        if (id != exclude && accept(squared_distance(query, points_.row(id)))) {
          out.push_back(id);
        }
      }
      return;
    }
    within_recursive(node.left, query, prune_squared_radius, exclude, accept, out);
    within_recursive(node.right, query, prune_squared_radius, exclude, accept, out);
  }

  Points points_;
  Index leaf_capacity_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  std::vector<RowVector> lower_;
  std::vector<RowVector> upper_;
};

}  // namespace mixent
