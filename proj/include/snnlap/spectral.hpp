#pragma once

// Smallest eigenpairs of L^snn and graph connectivity.
//
// The iterative solver is a restarted block Krylov method: each cycle expands
// the current block X into [X, LX, ..., L^s X] with full reorthogonalization,
// does Rayleigh-Ritz on that space, and restarts from the leading Ritz vectors.
// A block wider than the number of wanted pairs resolves repeated eigenvalues
// such as the zero eigenvalue of a disconnected graph.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/rng.hpp"
#include "snnlap/snn_graph.hpp"

namespace snnlap {

/// A symmetric linear map on R^n given by its action.
struct SymmetricOperator {
  std::size_t n = 0;
  std::function<std::vector<double>(std::span<const double>)> apply;
  double norm_bound = 1.0;  // any upper bound on the spectral norm
};

inline SymmetricOperator snn_operator(const SnnGraph& g) {
  double dmax = 0.0;
  for (double d : g.degrees()) dmax = std::max(dmax, d);
  // Gershgorin: |lambda| <= max_i (d_i + (1/n) sum_j w_ij) = 2 max d_i.
  const double bound = std::max(2.0 * dmax * g.snn_factor(), 1e-300);
  return {g.n(), [&g](std::span<const double> u) { return apply_snn_laplacian(g, u); }, bound};
}

enum class EigenMethod { Auto, Krylov, Dense };

struct EigenOptions {
  double tol = 1e-8;  // residual bound relative to the operator norm bound
  std::size_t max_restarts = 300;
  std::size_t krylov_depth = 0;  // 0 picks a depth from the block size
  std::uint64_t seed = 0;
  EigenMethod method = EigenMethod::Auto;
};

struct EigenResult {
  std::vector<double> eigenvalues;                // nondecreasing
  std::vector<std::vector<double>> eigenvectors;  // (1/n) sum v_i^2 = 1
  std::vector<double> residual_norms;             // ||L v - lambda v||_2 / sqrt(n)
  std::size_t iterations = 0;
  bool converged = false;
  EigenMethod method_used = EigenMethod::Dense;
};

namespace detail {

inline void fix_sign_and_scale(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0) v = -v;
  v *= std::sqrt(static_cast<double>(v.size())) / v.norm();
}

inline Eigen::VectorXd apply_op(const SymmetricOperator& op, const Eigen::VectorXd& x) {
  const auto y = op.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

inline EigenResult finish(const SymmetricOperator& op, const Eigen::VectorXd& values,
                          const Eigen::MatrixXd& vectors, std::size_t q) {
  EigenResult r;
  for (std::size_t j = 0; j < q; ++j) {
    Eigen::VectorXd v = vectors.col(static_cast<Eigen::Index>(j));
    fix_sign_and_scale(v);
    const double lambda = values[static_cast<Eigen::Index>(j)];
    const Eigen::VectorXd res = apply_op(op, v) - lambda * v;
    r.eigenvalues.push_back(lambda);
    r.eigenvectors.emplace_back(v.data(), v.data() + v.size());
    r.residual_norms.push_back(res.norm() / std::sqrt(static_cast<double>(v.size())));
  }
  return r;
}

/// Orthogonalizes v against the first `cols` columns of Q twice; returns the remaining norm.
inline double orthogonalize(const Eigen::MatrixXd& Q, Eigen::Index cols, Eigen::VectorXd& v) {
  for (int pass = 0; pass < 2; ++pass) {
    if (cols == 0) break;
    const Eigen::VectorXd c = Q.leftCols(cols).transpose() * v;
    v.noalias() -= Q.leftCols(cols) * c;
  }
  return v.norm();
}

}  // namespace detail

/// Full dense diagonalization; the operator is materialized column by column.
inline EigenResult dense_eigenpairs(const SymmetricOperator& op, std::size_t q) {
  const auto n = static_cast<Eigen::Index>(op.n);
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    A.col(j) = detail::apply_op(op, e);
    e[j] = 0.0;
  }
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) throw Error("dense eigensolver failed");
  auto r = detail::finish(op, solver.eigenvalues(), solver.eigenvectors(), q);
  r.converged = true;
  r.method_used = EigenMethod::Dense;
  r.iterations = 1;
  return r;
}

inline EigenResult krylov_eigenpairs(const SymmetricOperator& op, std::size_t q,
                                     const EigenOptions& opt) {
  const auto n = static_cast<Eigen::Index>(op.n);
  const auto block = static_cast<Eigen::Index>(std::min<std::size_t>(q + 2, op.n));
  const auto depth = static_cast<Eigen::Index>(
      opt.krylov_depth > 0 ? opt.krylov_depth : std::max<std::size_t>(8, 96 / (q + 2)));
  const Eigen::Index max_cols = std::min<Eigen::Index>(n, block * (depth + 1));
  const double scale = op.norm_bound;
  const double drop = 1e-10;

  Eigen::MatrixXd X(n, block);
  RandomStream rng(opt.seed, StreamPurpose::Eigen, 0);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.normal();

  Eigen::MatrixXd Q(n, max_cols), AQ(n, max_cols);
  Eigen::VectorXd values;
  Eigen::MatrixXd ritz;
  EigenResult result;
  for (std::size_t cycle = 1; cycle <= opt.max_restarts; ++cycle) {
    Eigen::Index cols = 0;
    // Seed block.
    for (Eigen::Index j = 0; j < X.cols() && cols < max_cols; ++j) {
      Eigen::VectorXd v = X.col(j);
      const double before = v.norm();
      const double after = detail::orthogonalize(Q, cols, v);
      if (after <= drop * before) continue;
      Q.col(cols) = v / after;
      AQ.col(cols) = detail::apply_op(op, Q.col(cols));
      ++cols;
    }
    // Expand by repeated application to the newest block.
    Eigen::Index first = 0;
    while (cols < max_cols) {
      const Eigen::Index last = cols;
      if (first == last) break;
      for (Eigen::Index j = first; j < last && cols < max_cols; ++j) {
        Eigen::VectorXd v = AQ.col(j) / scale;
        const double before = v.norm();
        const double after = detail::orthogonalize(Q, cols, v);
        if (after <= drop * std::max(before, 1e-300)) continue;
        Q.col(cols) = v / after;
        AQ.col(cols) = detail::apply_op(op, Q.col(cols));
        ++cols;
      }
      first = last;
    }

    Eigen::MatrixXd T = Q.leftCols(cols).transpose() * AQ.leftCols(cols);
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
    values = small.eigenvalues();
    ritz = Q.leftCols(cols) * small.eigenvectors();
    const Eigen::MatrixXd A_ritz = AQ.leftCols(cols) * small.eigenvectors();

    const auto want = static_cast<Eigen::Index>(q);
    bool done = cols >= want;
    for (Eigen::Index j = 0; j < std::min(want, cols) && done; ++j) {
      const double res = (A_ritz.col(j) - values[j] * ritz.col(j)).norm();
      if (!(res <= opt.tol * scale)) done = false;
    }
    result.iterations = cycle;
    if (done || cols == n) {
      result.converged = true;
      break;
    }
    X = ritz.leftCols(std::min(block, cols));
  }
  const std::size_t have = std::min<std::size_t>(q, static_cast<std::size_t>(values.size()));
  auto r = detail::finish(op, values, ritz, have);
  r.iterations = result.iterations;
  r.converged = result.converged && have == q;
  r.method_used = EigenMethod::Krylov;
  return r;
}

/// First q eigenpairs of a symmetric operator by ascending eigenvalue.
inline EigenResult smallest_eigenpairs(const SymmetricOperator& op, std::size_t q,
                                       const EigenOptions& opt = {}) {
  if (q < 1 || q > op.n) throw InvalidParams("need 1 <= q <= n");
  const bool dense = opt.method == EigenMethod::Dense ||
                     (opt.method == EigenMethod::Auto && op.n <= 500);
  return dense ? dense_eigenpairs(op, q) : krylov_eigenpairs(op, q, opt);
}

inline EigenResult smallest_eigenpairs(const SnnGraph& g, std::size_t q, const EigenOptions& opt = {}) {
  return smallest_eigenpairs(snn_operator(g), q, opt);
}

struct Components {
  std::size_t count = 0;
  std::vector<std::uint32_t> labels;  // numbered by first appearance
};

/// Reachability over edges with positive shared count.
inline Components connected_components(const SnnGraph& g) {
  const std::size_t n = g.n();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  const auto find = [&](std::uint32_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  const auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  if (g.materialized()) {
    const auto& c = g.shared_counts();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = c.offsets[i]; e < c.offsets[i + 1]; ++e)
        unite(static_cast<std::uint32_t>(i), c.columns[e]);
  } else {
    // Every pair inside one reverse list shares that sample.
    for (std::size_t l = 0; l < n; ++l) {
      const auto r = g.reverse(l);
      for (std::size_t t = 1; t < r.size(); ++t) unite(r[0], r[t]);
    }
  }
  Components out;
  out.labels.assign(n, 0);
  std::vector<std::int64_t> label_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(static_cast<std::uint32_t>(i));
    if (label_of[root] < 0) label_of[root] = static_cast<std::int64_t>(out.count++);
    out.labels[i] = static_cast<std::uint32_t>(label_of[root]);
  }
  return out;
}

}  // namespace snnlap
