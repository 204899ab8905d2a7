#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"

namespace snnlap {

enum class DensityFamily { Uniform, SmoothBump };

/// Model-independent description of a density, used for provenance and configs.
struct DensityDescriptor {
  DensityFamily family = DensityFamily::Uniform;
  std::vector<double> center;  // ambient coordinates, SmoothBump only
  double concentration = 0.0;  // SmoothBump only

  static DensityDescriptor uniform() { return {}; }
  static DensityDescriptor smooth_bump(std::vector<double> center, double concentration) {
    return {DensityFamily::SmoothBump, std::move(center), concentration};
  }

  bool operator==(const DensityDescriptor&) const = default;
};

namespace detail {

/// max over t in [-1, 1] of exp(kappa t) sqrt(1 - t^2), attained where kappa (1 - t^2) = t.
inline double bump_slope_peak(double kappa) {
  const double t = (-1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa)) / (2.0 * kappa);
  return std::exp(kappa * t) * std::sqrt(1.0 - t * t);
}

}  // namespace detail

/// A smooth positive probability density on the model M with respect to dV.
///
/// Uniform is the constant 1/vol(M). SmoothBump is a von Mises-Fisher density
/// C exp(kappa <mu, x>) on the sphere and a product of two von Mises factors
/// exp(kappa cos(u - u0) + kappa cos(v - v0)) / (2 pi I0(kappa))^2 on the torus.
template <class M>
class Density {
 public:
  using Point = typename M::Point;

  static Density uniform() {
    Density d;
    d.descriptor_ = DensityDescriptor::uniform();
    d.norm_ = 1.0 / M::volume();
    d.p_min_ = d.p_max_ = d.norm_;
    d.grad_bound_ = 0.0;
    return d;
  }

  static Density smooth_bump(const Point& center, double concentration) {
    if (!(concentration > 0.0) || !std::isfinite(concentration))
      throw InvalidParams("bump concentration must be positive and finite");
    Density d;
    d.center_ = require_on_manifold<M>(center);
    d.kappa_ = concentration;
    d.descriptor_ = DensityDescriptor::smooth_bump(
        std::vector<double>(d.center_.data(), d.center_.data() + M::ambient_dim), concentration);
    const double k = concentration;
    if constexpr (M::id == ModelId::Sphere2) {
      // C exp(k t) with C = k / (4 pi sinh k), stored relative to exp(k).
      d.norm_ = k / (2.0 * std::numbers::pi * (1.0 - std::exp(-2.0 * k)));
      d.p_max_ = d.norm_;
      d.p_min_ = d.norm_ * std::exp(-2.0 * k);
      d.grad_bound_ = d.norm_ * std::exp(-k) * k * detail::bump_slope_peak(k);
    } else {
      const auto [u0, v0] = M::angles(d.center_);
      d.u0_ = u0;
      d.v0_ = v0;
      const double z = 2.0 * std::numbers::pi * std::cyl_bessel_i(0.0, k);
      // exp(k cos a + k cos b) / z^2, stored relative to exp(2k).
      d.norm_ = std::exp(2.0 * k) / (z * z);
      d.p_max_ = d.norm_;
      d.p_min_ = d.norm_ * std::exp(-4.0 * k);
      // |grad p| <= p k (|sin a| + |sin b|): an upper estimate of max |grad p|.
      d.grad_bound_ = 2.0 * k * detail::bump_slope_peak(k) * std::exp(k) / (z * z);
    }
    return d;
  }

  static Density from_descriptor(const DensityDescriptor& desc) {
    if (desc.family == DensityFamily::Uniform) return uniform();
    if (desc.center.size() != static_cast<std::size_t>(M::ambient_dim))
      throw InvalidParams("bump center dimension does not match the model");
    Point c;
    for (int i = 0; i < M::ambient_dim; ++i) c[i] = desc.center[i];
    return smooth_bump(c, desc.concentration);
  }

  /// p(x) for a point already on M (no membership check).
  double operator()(const Point& x) const {
    if (descriptor_.family == DensityFamily::Uniform) return norm_;
    if constexpr (M::id == ModelId::Sphere2) {
      return norm_ * std::exp(kappa_ * (center_.dot(x) - 1.0));
    } else {
      const auto [u, v] = M::angles(x);
      return norm_ * std::exp(kappa_ * (std::cos(u - u0_) + std::cos(v - v0_) - 2.0));
    }
  }

  /// Intrinsic gradient of log p as an ambient tangent vector.
  Point grad_log(const Point& x) const {
    if (descriptor_.family == DensityFamily::Uniform) return Point::Zero();
    if constexpr (M::id == ModelId::Sphere2) {
      return kappa_ * M::tangent_projection(x, center_);
    } else {
      const auto [u, v] = M::angles(x);
      const auto frame = M::tangent_frame(x);
      return -kappa_ * std::sin(u - u0_) * frame.e1 - kappa_ * std::sin(v - v0_) * frame.e2;
    }
  }

  bool is_uniform() const { return descriptor_.family == DensityFamily::Uniform; }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }
  /// Upper estimate of max |grad p| over M.
  double grad_bound() const { return grad_bound_; }
  const DensityDescriptor& descriptor() const { return descriptor_; }

 private:
  DensityDescriptor descriptor_;
  Point center_ = Point::Zero();
  double kappa_ = 0.0;
  double u0_ = 0.0;
  double v0_ = 0.0;
  double norm_ = 0.0;
  double p_min_ = 0.0;
  double p_max_ = 0.0;
  double grad_bound_ = 0.0;
};

template <class M>
struct DensityValue {
  double p;
  typename M::Point grad_log_p;
};

template <class M>
DensityValue<M> eval_density(const Density<M>& density, const typename M::Point& x) {
  const auto y = require_on_manifold<M>(x);
  return {density(y), density.grad_log(y)};
}

}  // namespace snnlap
