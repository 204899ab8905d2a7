#pragma once

// Dirichlet energy, its bilinear form, Green's identity and the Rayleigh
// quotient, all evaluated by quadrature on the model manifold.

#include <cmath>

#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/operators.hpp"
#include "snnlap/quadrature.hpp"
#include "snnlap/test_function.hpp"

namespace snnlap {

/// B(f, g) = int grad f . grad g p^{1-2/m} dV
template <class M>
double bilinear_form(const Density<M>& density, const TestFunction<M>& f, const TestFunction<M>& g,
                     const QuadratureRule<M>& rule) {
  constexpr double m = M::intrinsic_dim;
  return integrate(rule, [&](const typename M::Point& x) {
    return f.gradient(x).dot(g.gradient(x)) * std::pow(density(x), 1.0 - 2.0 / m);
  });
}

template <class M>
double dirichlet_energy(const Density<M>& density, const TestFunction<M>& f,
                        const QuadratureRule<M>& rule) {
  constexpr double m = M::intrinsic_dim;
  return integrate(rule, [&](const typename M::Point& x) {
    return f.gradient(x).squaredNorm() * std::pow(density(x), 1.0 - 2.0 / m);
  });
}

/// 2 <Delta^snn f, g>_mu - B(f, g); zero on closed manifolds.
template <class M>
double greens_identity_residual(const Density<M>& density, const TestFunction<M>& f,
                                const TestFunction<M>& g, const QuadratureRule<M>& rule) {
  const double lhs = 2.0 * integrate(rule, [&](const typename M::Point& x) {
    return apply_delta_snn(density, f, x) * g(x) * density(x);
  });
  return lhs - bilinear_form(density, f, g, rule);
}

/// B(f, f) / (2 int (f - fbar)^2 p dV) with fbar the p-weighted mean of f.
template <class M>
double continuum_rayleigh(const Density<M>& density, const TestFunction<M>& f,
                          const QuadratureRule<M>& rule) {
  const double mass = integrate(rule, [&](const typename M::Point& x) { return density(x); });
  const double mean =
      integrate(rule, [&](const typename M::Point& x) { return f(x) * density(x); }) / mass;
  const double raw =
      integrate(rule, [&](const typename M::Point& x) { return f(x) * f(x) * density(x); });
  const double centred = integrate(rule, [&](const typename M::Point& x) {
    const double v = f(x) - mean;
    return v * v * density(x);
  });
  if (!(centred > 1e-20 * raw)) throw ZeroDenominator("f is constant after recentring");
  return dirichlet_energy(density, f, rule) / (2.0 * centred);
}

}  // namespace snnlap
