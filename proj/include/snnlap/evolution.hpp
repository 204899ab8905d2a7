#pragma once

// Intermediate operators between the graph Laplacian and its continuum limit:
//   L1 uses the expected-overlap kernel w_k built from the empirical radii eps_k,
//   Lsharp swaps in the continuous radii eps, and L2 replaces the sample sum
//   by an integral against p dV.
// Kernels are mu-masses of intersections of two geodesic balls, computed in
// geodesic polar coordinates around the first point.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/neighbor_index.hpp"
#include "snnlap/parallel.hpp"
#include "snnlap/quadrature.hpp"
#include "snnlap/test_function.hpp"

namespace snnlap {

/// Radial panels, Gauss points per panel (fixed at 4), and angular nodes for L2.
/// With refine set, both counts grow at each x until node spacing is at most eps(x)/8.
struct L2Resolution {
  std::size_t radial_panels = 32;
  std::size_t angular_nodes = 160;
  bool refine = true;
};

enum class KernelMethod {
  Auto,        // closed-form areas for uniform densities, quadrature otherwise
  Quadrature,  // always integrate numerically
};

/// int_{B(x, a) cap B(y, b)} p dV with geodesic radii a, b.
template <class M, class P>
double ball_overlap_mass(const typename M::Point& x, double a, const typename M::Point& y, double b,
                         const P& density, KernelMethod method = KernelMethod::Auto) {
  const double d = M::geodesic_distance(x, y);
  if (d >= a + b || a <= 0.0 || b <= 0.0) return 0.0;
  if (method == KernelMethod::Auto && density.is_uniform())
    return density.p_max() * M::ball_intersection_area(d, a, b);

  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  const auto frame = M::tangent_frame(x);
  const double theta0 = d > 0.0 ? M::direction_angle(x, frame, y) : 0.0;
  const bool uniform = density.is_uniform();
  const double p0 = density.p_max();

  const auto ray_mass = [&](double psi) {
    const double theta = theta0 + psi;
    const auto iv = M::ray_ball_intervals(x, frame, theta, y, b, a);
    double s = 0.0;
    for (int q = 0; q < iv.count; ++q) {
      const double lo = iv.pieces[q][0], hi = iv.pieces[q][1];
      if (uniform) {
        s += p0 * M::polar_area(lo, hi);
      } else {
        s += gauss<double, 10>::integrate(
            [&](double r) {
              return density(M::exp_polar(x, frame, r, theta)) * M::polar_jacobian(r);
            },
            lo, hi);
      }
    }
    return s;
  };

  // Split the angle range where the ray-interval structure changes.
  std::vector<double> cuts{-std::numbers::pi, 0.0, std::numbers::pi};
  if (d > 0.0) {
    for (double c : {M::tangent_angle(d, b), M::vertex_angle(a, d, b)})
      if (std::isfinite(c) && c > 0.0 && c < std::numbers::pi) {
        cuts.push_back(c);
        cuts.push_back(-c);
      }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], width = cuts[i + 1] - cuts[i];
    if (width <= 0.0) continue;
    // psi = lo + width (1 - cos(pi t)) / 2 flattens the square-root behaviour at tangent cuts.
    const auto substituted = [&](double t) {
      const double psi = lo + 0.5 * width * (1.0 - std::cos(std::numbers::pi * t));
      return ray_mass(psi) * 0.5 * width * std::numbers::pi * std::sin(std::numbers::pi * t);
    };
    total += gauss_kronrod<double, 15>::integrate(substituted, 0.0, 1.0, 10, 1e-10);
  }
  return total;
}

/// Everything the intermediate operators need about one sample cloud.
template <class M>
struct EvolutionContext {
  using Point = typename M::Point;

  const NeighborIndex* index = nullptr;
  Density<M> density = Density<M>::uniform();
  std::size_t n = 0;
  std::size_t k = 0;
  double alpha = std::numbers::pi;
  std::vector<Point> samples;
  std::vector<double> sample_eps_k;  // geodesic radii of the k-NN balls
  std::vector<double> sample_eps;    // continuous radii eps(x_i)
  double max_eps_k = 0.0;
  double eps_star = 0.0;
  L2Resolution l2{};
  KernelMethod kernel_method = KernelMethod::Auto;

  /// eps(x) from k/n = alpha p(x) eps(x)^m.
  double eps(const Point& x) const {
    constexpr double m = M::intrinsic_dim;
    return std::pow(static_cast<double>(k) / (alpha * static_cast<double>(n) * density(x)), 1.0 / m);
  }

  /// Geodesic radius of the closed ball holding the k nearest samples of x.
  double eps_k(const Point& x) const {
    return M::chord_to_geodesic(index->eps_k(std::span<const double>(x.data(), M::ambient_dim), k));
  }
};

/// eps_star is the largest eps over the nodes of `rule` and the samples.
template <class M>
EvolutionContext<M> make_evolution_context(const NeighborIndex& index, const Density<M>& density,
                                           std::size_t k, const QuadratureRule<M>& rule) {
  const std::size_t n = index.size();
  if (k < 1) throw InvalidParams("k must be positive");
  if (k >= n) throw KTooLarge("k must be at most n - 1");
  if (index.cloud().dim() != M::ambient_dim)
    throw InvalidParams("cloud dimension does not match the model");

  EvolutionContext<M> ctx;
  ctx.index = &index;
  ctx.density = density;
  ctx.n = n;
  ctx.k = k;
  ctx.alpha = M::constants().unit_ball_volume;
  ctx.samples.resize(n);
  ctx.sample_eps_k.resize(n);
  ctx.sample_eps.resize(n);
  parallel_for(0, n, [&](std::size_t i) {
    ctx.samples[i] = index.cloud().template point<M>(i);
    ctx.sample_eps_k[i] = M::chord_to_geodesic(index.eps_k(i, k));
    ctx.sample_eps[i] = ctx.eps(ctx.samples[i]);
  });
  ctx.max_eps_k = *std::max_element(ctx.sample_eps_k.begin(), ctx.sample_eps_k.end());
  ctx.eps_star = *std::max_element(ctx.sample_eps.begin(), ctx.sample_eps.end());
  for (const auto& x : rule.nodes) ctx.eps_star = std::max(ctx.eps_star, ctx.eps(x));
  return ctx;
}

template <class M>
EvolutionContext<M> make_evolution_context(const NeighborIndex& index, const Density<M>& density,
                                           std::size_t k) {
  return make_evolution_context(index, density, k, product_grid<M>(64));
}

/// w_k(x, y) = int eta(d(x,z)/eps_k(x)) eta(d(y,z)/eps_k(y)) p(z) dV(z)
template <class M>
double kernel_wk(const EvolutionContext<M>& ctx, const typename M::Point& x,
                 const typename M::Point& y) {
  const auto px = require_on_manifold<M>(x);
  const auto py = require_on_manifold<M>(y);
  // Radii come from the raw coordinates: reprojecting a sample can move it off distance 0.
  return ball_overlap_mass<M>(px, ctx.eps_k(x), py, ctx.eps_k(y), ctx.density, ctx.kernel_method);
}

/// w(x, y), same as w_k with the continuous radii eps.
template <class M>
double kernel_w(const EvolutionContext<M>& ctx, const typename M::Point& x,
                const typename M::Point& y) {
  const auto px = require_on_manifold<M>(x);
  const auto py = require_on_manifold<M>(y);
  return ball_overlap_mass<M>(px, ctx.eps(px), py, ctx.eps(py), ctx.density, ctx.kernel_method);
}

/// (alpha n / k) w(x, x) - alpha; O(eps) as eps -> 0.
template <class M>
double omega_diagonal_deviation(const EvolutionContext<M>& ctx, const typename M::Point& x) {
  const double scale = ctx.alpha * static_cast<double>(ctx.n) / static_cast<double>(ctx.k);
  return scale * kernel_w(ctx, x, x) - ctx.alpha;
}

namespace detail {

template <class M, class Radius>
double sample_sum_operator(const EvolutionContext<M>& ctx, const TestFunction<M>& f,
                           const typename M::Point& x, double rx, double max_r, Radius&& radius) {
  constexpr double m = M::intrinsic_dim;
  const double kd = static_cast<double>(ctx.k);
  const double ratio = ctx.alpha * static_cast<double>(ctx.n) / kd;
  const double prefactor = std::pow(ratio, 1.0 + 2.0 / m) / (std::pow(2.0, m + 2.0) * kd);
  const double fx = f(x);
  // Chordal distance never exceeds geodesic distance, so this ball is a superset.
  const auto candidates =
      ctx.index->within(std::span<const double>(x.data(), M::ambient_dim), rx + max_r);
  double s = 0.0;
  for (const auto& c : candidates) {
    const auto& y = ctx.samples[c.index];
    const double diff = fx - f(y);
    if (diff == 0.0) continue;
    s += ball_overlap_mass<M>(x, rx, y, radius(c.index), ctx.density, ctx.kernel_method) * diff;
  }
  return prefactor * s;
}

}  // namespace detail

/// L1 f(x) = (alpha n/k)^{1+2/m} / (2^{m+2} k) sum_i w_k(x, x_i) (f(x) - f(x_i))
template <class M>
double op_L1(const EvolutionContext<M>& ctx, const TestFunction<M>& f, const typename M::Point& x) {
  const auto px = require_on_manifold<M>(x);
  return detail::sample_sum_operator(ctx, f, px, ctx.eps_k(x), ctx.max_eps_k,
                                     [&](std::size_t i) { return ctx.sample_eps_k[i]; });
}

/// L1 with w in place of w_k.
template <class M>
double op_Lsharp(const EvolutionContext<M>& ctx, const TestFunction<M>& f,
                 const typename M::Point& x) {
  const auto px = require_on_manifold<M>(x);
  const double max_eps =
      std::max(ctx.eps_star, *std::max_element(ctx.sample_eps.begin(), ctx.sample_eps.end()));
  return detail::sample_sum_operator(ctx, f, px, ctx.eps(px), max_eps,
                                     [&](std::size_t i) { return ctx.sample_eps[i]; });
}

/// L2 f(x) = (alpha n/k)^{2+2/m} / (alpha 2^{m+2}) int_{B(x, 2 eps*)} w(x,y) (f(x)-f(y)) p(y) dV(y)
template <class M>
double op_L2(const EvolutionContext<M>& ctx, const TestFunction<M>& f, const typename M::Point& x) {
  using boost::math::quadrature::gauss;
  constexpr double m = M::intrinsic_dim;
  const auto px = require_on_manifold<M>(x);
  const double ex = ctx.eps(px);
  // w(x, y) vanishes once d(x, y) >= eps(x) + eps(y), so the 2 eps* ball can be cut there.
  const double star = std::max(ctx.eps_star, ex);
  const double reach = std::min(2.0 * star, ex + star);

  std::size_t panels = ctx.l2.radial_panels;
  std::size_t nang = ctx.l2.angular_nodes;
  if (ctx.l2.refine) {
    const double spacing = ex / 8.0;
    panels = std::max(panels, static_cast<std::size_t>(std::ceil(reach / spacing)));
    nang = std::max(nang, static_cast<std::size_t>(
                              std::ceil(2.0 * std::numbers::pi * M::polar_jacobian(reach) / spacing)));
  }
  if (panels < 1 || nang < 1) throw QuadratureTooCoarse("empty L2 grid");
  const double dr = reach / static_cast<double>(panels);
  const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(nang);
  const double rim = M::polar_jacobian(reach) * dtheta;
  if (dr > ex / 8.0 || rim > ex / 8.0)
    throw QuadratureTooCoarse("L2 node spacing exceeds eps(x)/8");

  const auto frame = M::tangent_frame(px);
  const double fx = f(px);
  const auto& abscissa = gauss<double, 4>::abscissa();
  const auto& weight = gauss<double, 4>::weights();
  double total = 0.0;
  for (std::size_t pnl = 0; pnl < panels; ++pnl) {
    const double mid = (static_cast<double>(pnl) + 0.5) * dr;
    for (std::size_t g = 0; g < abscissa.size(); ++g) {
      for (int sgn : {-1, 1}) {
        if (abscissa[g] == 0.0 && sgn < 0) continue;
        const double r = mid + 0.5 * dr * sgn * abscissa[g];
        const double wr = 0.5 * dr * weight[g] * M::polar_jacobian(r);
        double ring = 0.0;
        for (std::size_t t = 0; t < nang; ++t) {
          const double theta = static_cast<double>(t) * dtheta;
          const auto y = M::project(M::exp_polar(px, frame, r, theta));
          const double w = ball_overlap_mass<M>(px, ex, y, ctx.eps(y), ctx.density, ctx.kernel_method);
          if (w == 0.0) continue;
          ring += w * (fx - f(y)) * ctx.density(y);
        }
        total += wr * dtheta * ring;
      }
    }
  }
  const double ratio = ctx.alpha * static_cast<double>(ctx.n) / static_cast<double>(ctx.k);
  return std::pow(ratio, 2.0 + 2.0 / m) / (ctx.alpha * std::pow(2.0, m + 2.0)) * total;
}

}  // namespace snnlap
