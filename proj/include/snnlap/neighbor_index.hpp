#pragma once

// Exact Euclidean neighbor search over a point cloud.
//
// Neighbors are ordered by (distance, sample index); both backings compute
// distances with the same arithmetic, so they agree exactly, ties included.
// A sample at distance zero from the query is treated as the query itself and
// never reported.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/parallel.hpp"
#include "snnlap/sampling.hpp"

namespace snnlap {

enum class IndexBacking { BruteForce, SpatialTree };

struct Neighbor {
  std::size_t index;
  double distance;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Compressed neighbor lists: row i is indices[offsets[i] .. offsets[i+1]).
struct NeighborLists {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;

  std::size_t rows() const { return offsets.size() - 1; }
  std::span<const std::uint32_t> row(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

class NeighborIndex {
 public:
  explicit NeighborIndex(PointCloud cloud, IndexBacking backing = IndexBacking::SpatialTree,
                         std::size_t leaf_size = 16)
      : cloud_(std::move(cloud)), backing_(backing), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (cloud_.size() > std::numeric_limits<std::uint32_t>::max())
      throw InvalidParams("cloud too large for 32-bit neighbor indices");
    if (backing_ == IndexBacking::SpatialTree) build_tree();
  }

  const PointCloud& cloud() const { return cloud_; }
  IndexBacking backing() const { return backing_; }
  std::size_t size() const { return cloud_.size(); }

  /// The k nearest samples at positive distance from x, nearest first.
  std::vector<Neighbor> knn_query(std::span<const double> x, std::size_t k) const {
    check_query(x);
    if (k > size()) throw KTooLarge("k exceeds the number of samples");
    std::vector<Neighbor> heap;
    heap.reserve(k + 1);
    if (k > 0) {
      if (backing_ == IndexBacking::BruteForce) {
        for (std::size_t i = 0; i < size(); ++i) offer(heap, k, {i, dist(x, i)});
      } else {
        knn_tree(0, x, k, heap);
      }
    }
    if (heap.size() < k) throw KTooLarge("fewer than k samples at positive distance");
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  std::vector<Neighbor> knn_query(std::size_t i, std::size_t k) const {
    return knn_query(cloud_[i], k);
  }

  /// N_eps(x): samples with 0 < |x_i - x| <= eps.
  std::size_t count_within(std::span<const double> x, double eps) const {
    check_query(x);
    if (!(eps >= 0.0)) throw InvalidParams("radius must be nonnegative");
    std::size_t count = 0;
    visit_within(x, eps, [&](std::size_t, double) { ++count; });
    return count;
  }

  /// Samples with 0 < |x_i - x| <= eps, ordered by (distance, index).
  std::vector<Neighbor> within(std::span<const double> x, double eps) const {
    check_query(x);
    if (!(eps >= 0.0)) throw InvalidParams("radius must be nonnegative");
    std::vector<Neighbor> out;
    visit_within(x, eps, [&](std::size_t i, double d) { out.push_back({i, d}); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Smallest radius whose punctured closed ball holds at least k samples.
  double eps_k(std::span<const double> x, std::size_t k) const {
    if (k < 1) throw InvalidParams("k must be positive");
    return knn_query(x, k).back().distance;
  }

  double eps_k(std::size_t i, std::size_t k) const { return eps_k(cloud_[i], k); }

  /// Closed-ball neighborhood of cloud point i at radius eps_k(x_i): the k
  /// nearest neighbors plus any further samples tied at the k-th distance.
  std::vector<Neighbor> ball(std::size_t i, std::size_t k) const {
    const auto x = cloud_[i];
    if (k + 1 <= size()) {
      std::vector<Neighbor> nn;
      try {
        nn = knn_query(x, k + 1);
      } catch (const KTooLarge&) {
        return knn_query(x, k);
      }
      if (nn[k].distance == nn[k - 1].distance) return within(x, nn[k - 1].distance);
      nn.pop_back();
      return nn;
    }
    return knn_query(x, k);
  }

  /// Balls of every cloud point plus the radii eps_k(x_i).
  NeighborLists all_balls(std::size_t k, std::vector<double>* radii = nullptr) const {
    if (k < 1) throw InvalidParams("k must be positive");
    if (k + 1 > size()) throw KTooLarge("k must be at most n - 1");
    const std::size_t n = size();
    std::vector<std::vector<std::uint32_t>> rows(n);
    std::vector<double> r(n);
    parallel_for(0, n, [&](std::size_t i) {
      const auto nb = ball(i, k);
      rows[i].reserve(nb.size());
      for (const auto& e : nb) rows[i].push_back(static_cast<std::uint32_t>(e.index));
      r[i] = nb[k - 1].distance;
    });
    NeighborLists lists;
    lists.offsets.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) lists.offsets[i + 1] = lists.offsets[i] + rows[i].size();
    lists.indices.resize(lists.offsets[n]);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(rows[i].begin(), rows[i].end(), lists.indices.begin() + lists.offsets[i]);
      std::vector<std::uint32_t>().swap(rows[i]);
    }
    if (radii) *radii = std::move(r);
    return lists;
  }

 private:
  struct Node {
    std::size_t begin, end;  // range in perm_
    std::int64_t left = -1, right = -1;
  };

  PointCloud cloud_;
  IndexBacking backing_;
  std::size_t leaf_size_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_, box_hi_;  // nodes x dim

  void check_query(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(cloud_.dim()))
      throw InvalidParams("query dimension does not match the cloud");
  }

  double dist(std::span<const double> x, std::size_t i) const {
    return euclidean_distance(cloud_[i], x);
  }

  static void offer(std::vector<Neighbor>& heap, std::size_t k, Neighbor cand) {
    if (cand.distance == 0.0) return;
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void build_tree() {
    const std::size_t n = size();
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    nodes_.clear();
    box_lo_.clear();
    box_hi_.clear();
    if (n == 0) return;
    build_node(0, n);
  }

  std::size_t build_node(std::size_t begin, std::size_t end) {
    const int dim = cloud_.dim();
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    box_lo_.resize((id + 1) * dim, std::numeric_limits<double>::infinity());
    box_hi_.resize((id + 1) * dim, -std::numeric_limits<double>::infinity());
    for (std::size_t p = begin; p < end; ++p) {
      const auto x = cloud_[perm_[p]];
      for (int c = 0; c < dim; ++c) {
        box_lo_[id * dim + c] = std::min(box_lo_[id * dim + c], x[c]);
        box_hi_[id * dim + c] = std::max(box_hi_[id * dim + c], x[c]);
      }
    }
    if (end - begin <= leaf_size_) return id;
    int axis = 0;
    double widest = -1.0;
    for (int c = 0; c < dim; ++c) {
      const double extent = box_hi_[id * dim + c] - box_lo_[id * dim + c];
      if (extent > widest) {
        widest = extent;
        axis = c;
      }
    }
    if (widest <= 0.0) return id;  // all points coincide
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double xa = cloud_[a][axis], xb = cloud_[b][axis];
                       return xa < xb || (xa == xb && a < b);
                     });
    const auto left = build_node(begin, mid);
    const auto right = build_node(mid, end);
    nodes_[id].left = static_cast<std::int64_t>(left);
    nodes_[id].right = static_cast<std::int64_t>(right);
    return id;
  }

  // Lower bound on the distance from x to any point in the node's box. Rounding
  // is monotone, so the bound never exceeds a computed point distance.
  double box_distance(std::size_t id, std::span<const double> x) const {
    const int dim = cloud_.dim();
    double s = 0.0;
    for (int c = 0; c < dim; ++c) {
      double gap = 0.0;
      if (x[c] < box_lo_[id * dim + c])
        gap = box_lo_[id * dim + c] - x[c];
      else if (x[c] > box_hi_[id * dim + c])
        gap = x[c] - box_hi_[id * dim + c];
      s += gap * gap;
    }
    return std::sqrt(s);
  }

  void knn_tree(std::size_t id, std::span<const double> x, std::size_t k,
                std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::size_t p = node.begin; p < node.end; ++p) offer(heap, k, {perm_[p], dist(x, perm_[p])});
      return;
    }
    const auto l = static_cast<std::size_t>(node.left);
    const auto r = static_cast<std::size_t>(node.right);
    double dl = box_distance(l, x), dr = box_distance(r, x);
    const bool left_first = dl <= dr;
    const std::size_t first = left_first ? l : r, second = left_first ? r : l;
    const double d1 = left_first ? dl : dr, d2 = left_first ? dr : dl;
    if (heap.size() < k || d1 <= heap.front().distance) knn_tree(first, x, k, heap);
    if (heap.size() < k || d2 <= heap.front().distance) knn_tree(second, x, k, heap);
  }

  template <class Visit>
  void visit_within(std::span<const double> x, double eps, Visit&& visit) const {
    if (backing_ == IndexBacking::BruteForce || nodes_.empty()) {
      for (std::size_t i = 0; i < size(); ++i) {
        const double d = dist(x, i);
        if (d > 0.0 && d <= eps) visit(i, d);
      }
      return;
    }
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t id = stack.back();
      stack.pop_back();
      if (box_distance(id, x) > eps) continue;
      const Node& node = nodes_[id];
      if (node.left < 0) {
        for (std::size_t p = node.begin; p < node.end; ++p) {
          const double d = dist(x, perm_[p]);
          if (d > 0.0 && d <= eps) visit(perm_[p], d);
        }
      } else {
        stack.push_back(static_cast<std::size_t>(node.right));
        stack.push_back(static_cast<std::size_t>(node.left));
      }
    }
  }
};

/// Transposes neighbor lists: row l lists every i whose list contains l, ascending.
inline NeighborLists reverse_lists(const NeighborLists& lists) {
  const std::size_t n = lists.rows();
  NeighborLists rev;
  rev.offsets.assign(n + 1, 0);
  for (auto l : lists.indices) ++rev.offsets[l + 1];
  for (std::size_t i = 0; i < n; ++i) rev.offsets[i + 1] += rev.offsets[i];
  rev.indices.resize(lists.indices.size());
  std::vector<std::size_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (auto l : lists.row(i)) rev.indices[cursor[l]++] = static_cast<std::uint32_t>(i);
  return rev;
}

}  // namespace snnlap
