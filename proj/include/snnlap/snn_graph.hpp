#pragma once

// Shared-nearest-neighbor graphs with simcos weights and their Laplacians.
//
// Every node i owns the closed ball B_i of radius eps_k(x_i) (its k nearest
// neighbors, plus samples tied at the k-th distance). The shared count
// N(i, j) = #{l != i, j : x_l in B_i and x_l in B_j} gives w_ij = N(i, j) / k.
// Writing A for the n x n ball-incidence matrix, N = A A^T minus its diagonal,
// so W can be applied in O(nk) without storing it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/neighbor_index.hpp"
#include "snnlap/parallel.hpp"

namespace snnlap {

/// Intrinsic dimension and unit-ball volume used by the L^snn scaling.
struct GraphScale {
  int m = 2;
  double alpha = std::numbers::pi;
};

enum class Assembly {
  Materialized,  // explicit sparse W from inverted neighbor lists, O(n k^2)
  Factored,      // W applied through the ball incidence, O(n k) per product
};

enum class LaplacianKind { Unnormalized, Normalized, RandomWalk };

/// Row-compressed shared counts with sorted column indices; zero diagonal.
struct SharedCounts {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> columns;
  std::vector<std::uint32_t> counts;
};

class SnnGraph {
 public:
  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  const GraphScale& scale() const { return scale_; }
  /// Connectivity scale h = 2 (k / (alpha n))^{1/m}.
  double h() const {
    return 2.0 * std::pow(static_cast<double>(k_) / (scale_.alpha * static_cast<double>(n())),
                          1.0 / scale_.m);
  }
  /// h^{-(m+2)} = (alpha n / k)^{1+2/m} / 2^{m+2}.
  double snn_factor() const { return std::pow(h(), -(scale_.m + 2.0)); }

  /// Sample indices inside B_i, ordered by (distance, index).
  std::span<const std::uint32_t> ball(std::size_t i) const { return balls_.row(i); }
  /// Nodes whose ball contains sample l, ascending.
  std::span<const std::uint32_t> reverse(std::size_t l) const { return reverse_.row(l); }
  const NeighborLists& balls() const { return balls_; }
  const NeighborLists& reverse_balls() const { return reverse_; }
  /// eps_k(x_i) for every node.
  const std::vector<double>& radii() const { return radii_; }
  /// d_i = (1/n) sum_j w_ij.
  const std::vector<double>& degrees() const { return degrees_; }

  bool materialized() const { return counts_.has_value(); }
  const SharedCounts& shared_counts() const {
    if (!counts_) throw InvalidParams("graph weights were not materialized");
    return *counts_;
  }

  /// N(i, j) from the stored counts, or from the ball lists when factored.
  std::uint32_t shared_count(std::size_t i, std::size_t j) const {
    if (i == j) throw SameNode("shared count needs two distinct nodes");
    if (counts_) {
      const auto& c = *counts_;
      const auto first = c.columns.begin() + static_cast<std::ptrdiff_t>(c.offsets[i]);
      const auto last = c.columns.begin() + static_cast<std::ptrdiff_t>(c.offsets[i + 1]);
      const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
      return (it != last && *it == j) ? c.counts[static_cast<std::size_t>(it - c.columns.begin())] : 0;
    }
    std::vector<std::uint32_t> a(ball(i).begin(), ball(i).end());
    std::vector<std::uint32_t> b(ball(j).begin(), ball(j).end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::uint32_t shared = 0;
    for (std::size_t p = 0, q = 0; p < a.size() && q < b.size();) {
      if (a[p] < b[q]) {
        ++p;
      } else if (b[q] < a[p]) {
        ++q;
      } else {
        if (a[p] != i && a[p] != j) ++shared;
        ++p;
        ++q;
      }
    }
    return shared;
  }

  double weight(std::size_t i, std::size_t j) const {
    return static_cast<double>(shared_count(i, j)) / static_cast<double>(k_);
  }

  /// (1/n) W u.
  std::vector<double> apply_weights(std::span<const double> u) const {
    check_size(u);
    const std::size_t nn = n();
    const double kd = static_cast<double>(k_);
    const double nd = static_cast<double>(nn);
    std::vector<double> out(nn, 0.0);
    if (counts_) {
      const auto& c = *counts_;
      parallel_for(0, nn, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t e = c.offsets[i]; e < c.offsets[i + 1]; ++e)
          s += static_cast<double>(c.counts[e]) * u[c.columns[e]];
        out[i] = s / (kd * nd);
      });
      return out;
    }
    // (W u)_i = (1/k) sum_{l in B_i} (S_l - u_i),  S_l = sum_{j : l in B_j} u_j
    std::vector<double> reverse_sum(nn, 0.0);
    parallel_for(0, nn, [&](std::size_t l) {
      double s = 0.0;
      for (auto j : reverse(l)) s += u[j];
      reverse_sum[l] = s;
    });
    parallel_for(0, nn, [&](std::size_t i) {
      double s = 0.0;
      const auto b = ball(i);
      for (auto l : b) s += reverse_sum[l];
      out[i] = (s - static_cast<double>(b.size()) * u[i]) / (kd * nd);
    });
    return out;
  }

  /// Number of unordered pairs {i, j} with w_ij > 0.
  std::size_t edge_count() const {
    if (counts_) return counts_->columns.size() / 2;
    std::size_t total = 0;
    std::vector<std::uint8_t> seen(n(), 0);
    std::vector<std::uint32_t> touched;
    for (std::size_t i = 0; i < n(); ++i) {
      for (auto l : ball(i))
        for (auto j : reverse(l))
          if (j != i && !seen[j]) {
            seen[j] = 1;
            touched.push_back(j);
          }
      total += touched.size();
      for (auto j : touched) seen[j] = 0;
      touched.clear();
    }
    return total / 2;
  }

  /// Graph with hand-set shared counts (i, j, N) for i != j; both orientations
  /// are stored. Ball lists stay empty, so only count-based queries apply.
  static SnnGraph from_counts(std::size_t n, std::size_t k,
                              const std::vector<std::array<std::uint32_t, 3>>& entries,
                              GraphScale scale = {}) {
    if (k < 1) throw InvalidParams("k must be positive");
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows(n);
    for (const auto& [i, j, c] : entries) {
      if (i == j) throw SameNode("self loops are not allowed");
      if (i >= n || j >= n) throw InvalidParams("node index out of range");
      if (c == 0) continue;
      rows[i].emplace_back(j, c);
      rows[j].emplace_back(i, c);
    }
    SnnGraph g;
    g.k_ = k;
    g.scale_ = scale;
    g.balls_.offsets.assign(n + 1, 0);
    g.reverse_.offsets.assign(n + 1, 0);
    g.radii_.assign(n, 0.0);
    g.degrees_.assign(n, 0.0);
    SharedCounts c;
    c.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(rows[i].begin(), rows[i].end());
      for (std::size_t e = 0; e < rows[i].size(); ++e) {
        if (e > 0 && rows[i][e].first == rows[i][e - 1].first)
          throw InvalidParams("duplicate edge");
        c.columns.push_back(rows[i][e].first);
        c.counts.push_back(rows[i][e].second);
        g.degrees_[i] += rows[i][e].second;
      }
      c.offsets[i + 1] = c.columns.size();
      g.degrees_[i] /= static_cast<double>(n) * static_cast<double>(k);
    }
    g.n_ = n;
    g.counts_ = std::move(c);
    return g;
  }

 private:
  friend SnnGraph build_snn_graph(const NeighborIndex&, std::size_t, GraphScale, Assembly);

  void check_size(std::span<const double> u) const {
    if (u.size() != n()) throw InvalidParams("vector length does not match the graph");
  }

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  GraphScale scale_;
  NeighborLists balls_;
  NeighborLists reverse_;
  std::vector<double> radii_;
  std::vector<double> degrees_;
  std::optional<SharedCounts> counts_;
};

/// Builds the SNN graph of the indexed cloud at neighbor count k.
inline SnnGraph build_snn_graph(const NeighborIndex& index, std::size_t k, GraphScale scale = {},
                                Assembly assembly = Assembly::Materialized) {
  const std::size_t n = index.size();
  if (k < 1) throw InvalidParams("k must be positive");
  if (k >= n) throw KTooLarge("k must be at most n - 1");

  SnnGraph g;
  g.n_ = n;
  g.k_ = k;
  g.scale_ = scale;
  g.balls_ = index.all_balls(k, &g.radii_);
  g.reverse_ = reverse_lists(g.balls_);

  // sum_{j != i} N(i, j) = sum_{l in B_i} (|R_l| - 1)
  g.degrees_.resize(n);
  const double denom = static_cast<double>(n) * static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t total = 0;
    for (auto l : g.ball(i)) total += g.reverse(l).size() - 1;
    g.degrees_[i] = static_cast<double>(total) / denom;
  }

  if (assembly == Assembly::Materialized) {
    // Row i accumulates one count per (l in B_i, j in R_l), j != i.
    std::vector<std::vector<std::uint32_t>> cols(n), vals(n);
    parallel_for(0, n, [&](std::size_t i) {
      thread_local std::vector<std::uint32_t> acc;
      thread_local std::vector<std::uint32_t> touched;
      acc.assign(n, 0);
      touched.clear();
      for (auto l : g.ball(i))
        for (auto j : g.reverse(l))
          if (j != i && acc[j]++ == 0) touched.push_back(j);
      std::sort(touched.begin(), touched.end());
      cols[i] = touched;
      vals[i].reserve(touched.size());
      for (auto j : touched) vals[i].push_back(acc[j]);
    });
    SharedCounts c;
    c.offsets.resize(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) c.offsets[i + 1] = c.offsets[i] + cols[i].size();
    c.columns.reserve(c.offsets[n]);
    c.counts.reserve(c.offsets[n]);
    for (std::size_t i = 0; i < n; ++i) {
      c.columns.insert(c.columns.end(), cols[i].begin(), cols[i].end());
      c.counts.insert(c.counts.end(), vals[i].begin(), vals[i].end());
    }
    g.counts_ = std::move(c);
  }
  return g;
}

/// N(x_i, x_j) evaluated directly from the closed-ball definition, O(n).
inline std::uint32_t shared_count(const NeighborIndex& index, std::size_t i, std::size_t j,
                                  std::size_t k) {
  if (i == j) throw SameNode("shared count needs two distinct nodes");
  const auto& cloud = index.cloud();
  const double ri = index.eps_k(i, k);
  const double rj = index.eps_k(j, k);
  std::uint32_t shared = 0;
  for (std::size_t l = 0; l < cloud.size(); ++l) {
    if (l == i || l == j) continue;
    const double di = euclidean_distance(cloud[l], cloud[i]);
    const double dj = euclidean_distance(cloud[l], cloud[j]);
    if (di > 0.0 && di <= ri && dj > 0.0 && dj <= rj) ++shared;
  }
  return shared;
}

/// Cosine similarity of neighborhood memberships: N(x_i, x_j) / k.
inline double simcos(const NeighborIndex& index, std::size_t i, std::size_t j, std::size_t k) {
  return static_cast<double>(shared_count(index, i, j, k)) / static_cast<double>(k);
}

/// Unnormalized D - W (W acting with the 1/n of the degree convention),
/// normalized I - D^{-1/2} W D^{-1/2}, or random-walk I - D^{-1} W.
inline std::vector<double> apply_laplacian(const SnnGraph& g, LaplacianKind kind,
                                           std::span<const double> u) {
  const auto& d = g.degrees();
  const std::size_t n = g.n();
  if (kind != LaplacianKind::Unnormalized) {
    for (std::size_t i = 0; i < n; ++i)
      if (!(d[i] > 0.0)) throw IsolatedNode("node " + std::to_string(i) + " has zero degree");
  }
  std::vector<double> out(n);
  switch (kind) {
    case LaplacianKind::Unnormalized: {
      const auto wu = g.apply_weights(u);
      for (std::size_t i = 0; i < n; ++i) out[i] = d[i] * u[i] - wu[i];
      break;
    }
    case LaplacianKind::Normalized: {
      std::vector<double> scaled(n);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = u[i] / std::sqrt(d[i]);
      const auto wu = g.apply_weights(scaled);
      for (std::size_t i = 0; i < n; ++i) out[i] = u[i] - wu[i] / std::sqrt(d[i]);
      break;
    }
    case LaplacianKind::RandomWalk: {
      const auto wu = g.apply_weights(u);
      for (std::size_t i = 0; i < n; ++i) out[i] = u[i] - wu[i] / d[i];
      break;
    }
  }
  return out;
}

/// L^snn u = h^{-(m+2)} (D - W) u.
inline std::vector<double> apply_snn_laplacian(const SnnGraph& g, std::span<const double> u) {
  auto out = apply_laplacian(g, LaplacianKind::Unnormalized, u);
  const double factor = g.snn_factor();
  for (auto& v : out) v *= factor;
  return out;
}

/// <L^snn u, u>_{mu_n} evaluated as the double sum
/// h^{-(m+2)} / (2 n^2) sum_{i,j} w_ij (u_i - u_j)^2.
inline double graph_dirichlet_form(const SnnGraph& g, std::span<const double> u) {
  const std::size_t n = g.n();
  if (u.size() != n) throw InvalidParams("vector length does not match the graph");
  double total = 0.0;
  if (g.materialized()) {
    const auto& c = g.shared_counts();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = c.offsets[i]; e < c.offsets[i + 1]; ++e) {
        const double diff = u[i] - u[c.columns[e]];
        total += static_cast<double>(c.counts[e]) * diff * diff;
      }
  } else {
    // sum_{i, j in R_l} (u_i - u_j)^2 = 2 |R_l| sum u^2 - 2 (sum u)^2
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0, s2 = 0.0;
      for (auto i : g.reverse(l)) {
        s += u[i];
        s2 += u[i] * u[i];
      }
      total += 2.0 * static_cast<double>(g.reverse(l).size()) * s2 - 2.0 * s * s;
    }
  }
  const double nd = static_cast<double>(n);
  return g.snn_factor() * total / (2.0 * nd * nd * static_cast<double>(g.k()));
}

}  // namespace snnlap
