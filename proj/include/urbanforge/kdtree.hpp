#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace urbanforge {

/// Static kd-tree for exact k-nearest-neighbor queries. Ties in distance are broken by
/// point index, so results match a brute-force scan sorted by (distance, index).
template <typename Scalar, int Dim>
class KdTree {
 public:
  using Point = Eigen::Matrix<Scalar, Dim, 1>;

  struct Neighbor {
    double dist2;
    std::size_t index;
    bool operator<(const Neighbor& o) const { return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index); }
  };

  KdTree() = default;
  explicit KdTree(std::vector<Point> points) : points_(std::move(points)), perm_(points_.size()) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    if (!points_.empty()) root_ = build(0, perm_.size(), 0);
  }

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points sorted by (distance, index).
  std::vector<Neighbor> knn(const Point& q, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0 || points_.empty()) return heap;
    heap.reserve(k + 1);
    search(root_, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

 private:
  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 for leaves
    Scalar split{};
    std::int32_t left = -1, right = -1;
  };
  static constexpr std::size_t kLeafSize = 8;

  std::int32_t build(std::size_t begin, std::size_t end, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Point lo = points_[perm_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[perm_[i]]);
      hi = hi.cwiseMax(points_[perm_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    nodes_[id].axis = axis;
    nodes_[id].split = points_[perm_[mid]][axis];
    const std::int32_t l = build(begin, mid, depth + 1);
    const std::int32_t r = build(mid, end, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void offer(std::vector<Neighbor>& heap, std::size_t k, Neighbor n) const {
    if (heap.size() < k) {
      heap.push_back(n);
      std::push_heap(heap.begin(), heap.end());
    } else if (n < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = n;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void search(std::int32_t id, const Point& q, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t p = perm_[i];
        offer(heap, k, {(points_[p].template cast<double>() - q.template cast<double>()).squaredNorm(), p});
      }
      return;
    }
    const double diff = static_cast<double>(q[node.axis]) - static_cast<double>(node.split);
    const std::int32_t near = diff < 0 ? node.left : node.right;
    const std::int32_t far = diff < 0 ? node.right : node.left;
    search(near, q, k, heap);
    // Equal distances must still be visited so index tie-breaking stays exact.
    if (heap.size() < k || diff * diff <= heap.front().dist2 * (1 + 1e-12)) search(far, q, k, heap);
  }

  std::vector<Point> points_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace urbanforge
