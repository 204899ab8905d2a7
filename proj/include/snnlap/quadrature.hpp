#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/rng.hpp"

namespace snnlap {

enum class QuadratureKind { ProductGrid, MonteCarlo };

/// Positive-weight cubature on a model manifold; weights sum to the volume.
template <class M>
struct QuadratureRule {
  using Point = typename M::Point;

  QuadratureKind kind = QuadratureKind::ProductGrid;
  std::size_t resolution = 0;  // ProductGrid resolution or MonteCarlo count
  std::uint64_t seed = 0;
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// S^2: N equal-area bands in z, two Gauss points per band, 2N equispaced
/// longitudes. T^2: an N x N equispaced (u, v) grid.
template <class M>
QuadratureRule<M> product_grid(std::size_t resolution);

template <>
inline QuadratureRule<Sphere2> product_grid<Sphere2>(std::size_t resolution) {
  if (resolution < 1) throw InvalidParams("grid resolution must be positive");
  QuadratureRule<Sphere2> rule;
  rule.kind = QuadratureKind::ProductGrid;
  rule.resolution = resolution;
  const std::size_t nphi = 2 * resolution;
  const double band = 2.0 / static_cast<double>(resolution);
  const double gauss = 1.0 / std::sqrt(3.0);
  const double w = 0.5 * band * 2.0 * std::numbers::pi / static_cast<double>(nphi);
  rule.nodes.reserve(2 * resolution * nphi);
  for (std::size_t b = 0; b < resolution; ++b) {
    const double mid = -1.0 + (static_cast<double>(b) + 0.5) * band;
    for (double s : {-gauss, gauss}) {
      const double z = mid + 0.5 * band * s;
      const double rho = std::sqrt(1.0 - z * z);
      for (std::size_t j = 0; j < nphi; ++j) {
        const double phi = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) /
                           static_cast<double>(nphi);
        rule.nodes.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

template <>
inline QuadratureRule<FlatTorus2> product_grid<FlatTorus2>(std::size_t resolution) {
  if (resolution < 1) throw InvalidParams("grid resolution must be positive");
  QuadratureRule<FlatTorus2> rule;
  rule.kind = QuadratureKind::ProductGrid;
  rule.resolution = resolution;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(resolution);
  rule.nodes.reserve(resolution * resolution);
  for (std::size_t a = 0; a < resolution; ++a)
    for (std::size_t b = 0; b < resolution; ++b) {
      rule.nodes.push_back(FlatTorus2::from_angles(static_cast<double>(a) * step,
                                                   static_cast<double>(b) * step));
      rule.weights.push_back(step * step);
    }
  return rule;
}

/// count uniform nodes with equal weights vol / count.
template <class M>
QuadratureRule<M> monte_carlo_rule(std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidParams("Monte Carlo rule needs at least one node");
  QuadratureRule<M> rule;
  rule.kind = QuadratureKind::MonteCarlo;
  rule.resolution = count;
  rule.seed = seed;
  RandomStream rng(seed, StreamPurpose::Quadrature, 0);
  rule.nodes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = rng.uniform();
    const double t = rng.uniform();
    rule.nodes.push_back(M::from_unit_square(s, t));
  }
  rule.weights.assign(count, M::volume() / static_cast<double>(count));
  return rule;
}

template <class M, class F>
double integrate(const QuadratureRule<M>& rule, F&& integrand) {
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) total += rule.weights[i] * integrand(rule.nodes[i]);
  return total;
}

}  // namespace snnlap
