#pragma once

// Pointwise continuum operators and the model/assumption constants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/test_function.hpp"

namespace snnlap {

/// Weighted Laplace-Beltrami limit of the SNN (and kNN) graph Laplacian,
/// -(1/(2p)) div(p^{1-2/m} grad f), in divergence-expanded form.
template <class M>
double apply_delta_snn(const Density<M>& density, const TestFunction<M>& f,
                       const typename M::Point& x) {
  const auto y = require_on_manifold<M>(x);
  constexpr double m = M::intrinsic_dim;
  const double p = density(y);
  const double drift = density.grad_log(y).dot(f.gradient(y));
  return -0.5 * std::pow(p, -2.0 / m) * (f.laplacian(y) + (1.0 - 2.0 / m) * drift);
}

/// s-weighted Laplace-Beltrami operator -(1/(2 p^s)) div(p^s grad f).
template <class M>
double apply_delta_s(const Density<M>& density, const TestFunction<M>& f,
                     const typename M::Point& x, double s) {
  const auto y = require_on_manifold<M>(x);
  const double drift = density.grad_log(y).dot(f.gradient(y));
  return -0.5 * (f.laplacian(y) + s * drift);
}

/// c_M = alpha^{1/m} p_min^{1/m} min{1, i0, K^{-1/2}, R/2}; K = 0 drops its term.
template <class M>
double model_constants(const Density<M>& density) {
  const auto c = M::constants();
  const double m = c.intrinsic_dim;
  double scale = std::min({1.0, c.injectivity_lb, 0.5 * c.reach});
  if (c.curvature_bound > 0.0) scale = std::min(scale, 1.0 / std::sqrt(c.curvature_bound));
  return std::pow(c.unit_ball_volume, 1.0 / m) * std::pow(density.p_min(), 1.0 / m) * scale;
}

struct AssumptionReport {
  // 3 (k/n)^{1/m} < c_M
  bool scale_ok = false;
  double scale_lhs = 0.0;
  double c_M = 0.0;
  // (k/n)^{1/m} < alpha^{1/m} p_min^{1+1/m} / max|grad p|, with unit constant
  bool gradient_ok = false;
  double gradient_lhs = 0.0;
  double gradient_rhs = std::numeric_limits<double>::infinity();
  // k / ((log n)^{m/(m+4)} n^{4/(m+4)}); the schedule band wants this >> 1 and k << n
  double band_ratio = 0.0;

  bool all_ok() const { return scale_ok && gradient_ok; }
};

/// Advisory check of the sample-size/neighbor-count assumptions.
template <class M>
AssumptionReport check_assumptions(const Density<M>& density, std::size_t n, std::size_t k) {
  if (k < 1 || k >= n) throw InvalidParams("need 1 <= k < n");
  const auto c = M::constants();
  const double m = c.intrinsic_dim;
  const double kn = static_cast<double>(k) / static_cast<double>(n);
  const double kn_root = std::pow(kn, 1.0 / m);

  AssumptionReport r;
  r.c_M = model_constants(density);
  r.scale_lhs = 3.0 * kn_root;
  r.scale_ok = r.scale_lhs < r.c_M;
  r.gradient_lhs = kn_root;
  if (density.grad_bound() > 0.0) {
    r.gradient_rhs = std::pow(c.unit_ball_volume, 1.0 / m) *
                     std::pow(density.p_min(), 1.0 + 1.0 / m) / density.grad_bound();
  }
  r.gradient_ok = r.gradient_lhs < r.gradient_rhs;
  const double nd = static_cast<double>(n);
  r.band_ratio = static_cast<double>(k) /
                 (std::pow(std::log(nd), m / (m + 4.0)) * std::pow(nd, 4.0 / (m + 4.0)));
  return r;
}

}  // namespace snnlap
