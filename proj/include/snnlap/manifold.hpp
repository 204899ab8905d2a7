#pragma once

// Closed-form model manifolds: the unit sphere S^2 in R^3 and the flat torus
// (side 2*pi) embedded as a product of two unit circles in R^4.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "snnlap/errors.hpp"

namespace snnlap {

enum class ModelId { Sphere2, FlatTorus2 };

inline std::string_view to_string(ModelId id) {
  return id == ModelId::Sphere2 ? "sphere2" : "flat_torus2";
}

inline ModelId model_id_from_string(std::string_view s) {
  if (s == "sphere2") return ModelId::Sphere2;
  if (s == "flat_torus2") return ModelId::FlatTorus2;
  throw InvalidParams("unknown model '" + std::string(s) + "'");
}

/// Intrinsic constants of a model manifold.
struct ManifoldConstants {
  int intrinsic_dim;         // m
  int ambient_dim;           // d
  double curvature_bound;    // K, bound on |sectional curvature|
  double injectivity_lb;     // i0
  double reach;              // R
  double unit_ball_volume;   // alpha = vol of the unit m-ball
};

/// Volume of the unit ball in R^m.
inline double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

/// Membership tolerance in embedding coordinates.
inline constexpr double kManifoldTolerance = 1e-9;

/// Geodesic polar frame at a point: two orthonormal tangent vectors.
template <class Point>
struct TangentFrame {
  Point e1;
  Point e2;
};

/// A set of at most two disjoint radial intervals [lo, hi].
struct RadialIntervals {
  std::array<std::array<double, 2>, 2> pieces{};
  int count = 0;

  void add(double lo, double hi) {
    if (hi <= lo) return;
    if (count == 1 && lo <= pieces[0][1] && hi >= pieces[0][0]) {
      pieces[0][0] = std::min(pieces[0][0], lo);
      pieces[0][1] = std::max(pieces[0][1], hi);
      return;
    }
    pieces[count++] = {lo, hi};
  }
};

class Sphere2 {
 public:
  static constexpr ModelId id = ModelId::Sphere2;
  static constexpr int intrinsic_dim = 2;
  static constexpr int ambient_dim = 3;
  using Point = Eigen::Matrix<double, 3, 1>;
  using Frame = TangentFrame<Point>;

  static ManifoldConstants constants() {
    return {2, 3, 1.0, std::numbers::pi, 1.0, unit_ball_volume(2)};
  }

  static double volume() { return 4.0 * std::numbers::pi; }

  static double embedding_residual(const Point& x) { return std::abs(x.norm() - 1.0); }

  static Point project(const Point& x) { return x.normalized(); }

  static double geodesic_distance(const Point& x, const Point& y) {
    // atan2 form stays accurate at both small and antipodal separations.
    return std::atan2(x.cross(y).norm(), x.dot(y));
  }

  /// Area-preserving map from the unit square: z uniform in [-1, 1], phi uniform.
  static Point from_unit_square(double s, double t) {
    const double z = 2.0 * s - 1.0;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * t;
    return {rho * std::cos(phi), rho * std::sin(phi), z};
  }

  static Point tangent_projection(const Point& x, const Point& v) { return v - v.dot(x) * x; }

  static Frame tangent_frame(const Point& x) {
    // Pick the axis least aligned with x to seed Gram-Schmidt.
    Point seed = Point::UnitX();
    if (std::abs(x.y()) < std::abs(x.dot(seed))) seed = Point::UnitY();
    if (std::abs(x.z()) < std::abs(x.dot(seed))) seed = Point::UnitZ();
    Point e1 = tangent_projection(x, seed).normalized();
    Point e2 = x.cross(e1);
    return {e1, e2};
  }

  /// Point at geodesic distance r from x along direction cos(theta) e1 + sin(theta) e2.
  static Point exp_polar(const Point& x, const Frame& frame, double r, double theta) {
    const Point dir = std::cos(theta) * frame.e1 + std::sin(theta) * frame.e2;
    return std::cos(r) * x + std::sin(r) * dir;
  }

  /// Area element of geodesic polar coordinates.
  static double polar_jacobian(double r) { return std::sin(r); }

  /// Closed-form integral of the polar area element over [a, b].
  static double polar_area(double a, double b) { return std::cos(a) - std::cos(b); }

  /// Radial parameters r in [0, r_max] along the ray (x, theta) whose point lies
  /// in the closed geodesic ball B(y, radius).
  static RadialIntervals ray_ball_intervals(const Point& x, const Frame& frame, double theta,
                                            const Point& y, double radius, double r_max) {
    RadialIntervals out;
    const Point dir = std::cos(theta) * frame.e1 + std::sin(theta) * frame.e2;
    // cos d(z(r), y) = a cos r + b sin r = amp * cos(r - phase)
    const double a = x.dot(y);
    const double b = dir.dot(y);
    const double amp = std::hypot(a, b);
    const double c = std::cos(radius);
    if (amp <= 0.0) {
      if (c <= 0.0) out.add(0.0, r_max);
      return out;
    }
    const double ratio = c / amp;
    if (ratio > 1.0) return out;
    if (ratio <= -1.0) {
      out.add(0.0, r_max);
      return out;
    }
    const double phase = std::atan2(b, a);
    const double half = std::acos(ratio);
    for (double shift : {-2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi}) {
      const double lo = std::max(0.0, phase + shift - half);
      const double hi = std::min(r_max, phase + shift + half);
      if (hi > lo && out.count < 2) out.add(lo, hi);
    }
    return out;
  }

  /// Geodesic radius of the ball cut out by a chordal (ambient) ball of radius r.
  static double chord_to_geodesic(double r) { return 2.0 * std::asin(std::min(1.0, 0.5 * r)); }

  /// Polar angle at x of the geodesic from x toward y (0 when y == x).
  static double direction_angle(const Point& x, const Frame& frame, const Point& y) {
    const Point v = tangent_projection(x, y);
    return std::atan2(v.dot(frame.e2), v.dot(frame.e1));
  }

  /// Angle at the vertex between sides a and d of a geodesic triangle with
  /// opposite side b; NaN when no such triangle exists.
  static double vertex_angle(double a, double d, double b) {
    const double c = (std::cos(b) - std::cos(a) * std::cos(d)) / (std::sin(a) * std::sin(d));
    return std::abs(c) <= 1.0 ? std::acos(c) : std::numeric_limits<double>::quiet_NaN();
  }

  /// Angular half-width of the cone of rays from x that touch B(y, b), d(x, y) = d > b.
  static double tangent_angle(double d, double b) {
    const double sd = std::sin(d);
    const double c2 = (std::cos(b) * std::cos(b) - std::cos(d) * std::cos(d)) / (sd * sd);
    return (c2 >= 0.0 && c2 <= 1.0) ? std::acos(std::sqrt(c2))
                                    : std::numeric_limits<double>::quiet_NaN();
  }

  /// Area of B(x, a) intersected with B(y, b), d(x, y) = d; requires a, b < pi/2.
  static double ball_intersection_area(double d, double a, double b) {
    if (d >= a + b) return 0.0;
    if (d <= std::abs(a - b)) return 2.0 * std::numbers::pi * (1.0 - std::cos(std::min(a, b)));
    const auto clamp_acos = [](double v) { return std::acos(std::clamp(v, -1.0, 1.0)); };
    const double ca = std::cos(a), cb = std::cos(b), cd = std::cos(d);
    const double sa = std::sin(a), sb = std::sin(b), sd = std::sin(d);
    return 2.0 * std::numbers::pi - 2.0 * ca * clamp_acos((cb - ca * cd) / (sa * sd)) -
           2.0 * cb * clamp_acos((ca - cb * cd) / (sb * sd)) -
           2.0 * clamp_acos((cd - ca * cb) / (sa * sb));
  }
};

class FlatTorus2 {
 public:
  static constexpr ModelId id = ModelId::FlatTorus2;
  static constexpr int intrinsic_dim = 2;
  static constexpr int ambient_dim = 4;
  using Point = Eigen::Matrix<double, 4, 1>;
  using Frame = TangentFrame<Point>;

  static ManifoldConstants constants() {
    return {2, 4, 0.0, std::numbers::pi, 1.0, unit_ball_volume(2)};
  }

  static double volume() { return 4.0 * std::numbers::pi * std::numbers::pi; }

  static double embedding_residual(const Point& x) {
    return std::max(std::abs(std::hypot(x[0], x[1]) - 1.0), std::abs(std::hypot(x[2], x[3]) - 1.0));
  }

  static Point project(const Point& x) {
    const double r1 = std::hypot(x[0], x[1]);
    const double r2 = std::hypot(x[2], x[3]);
    return {x[0] / r1, x[1] / r1, x[2] / r2, x[3] / r2};
  }

  static Point from_angles(double u, double v) {
    return {std::cos(u), std::sin(u), std::cos(v), std::sin(v)};
  }

  /// Intrinsic angle coordinates (u, v) in (-pi, pi].
  static std::array<double, 2> angles(const Point& x) {
    return {std::atan2(x[1], x[0]), std::atan2(x[3], x[2])};
  }

  /// Wraps an angle difference into [-pi, pi].
  static double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

  static double geodesic_distance(const Point& x, const Point& y) {
    const auto [ux, vx] = angles(x);
    const auto [uy, vy] = angles(y);
    return std::hypot(wrap(uy - ux), wrap(vy - vx));
  }

  static Point from_unit_square(double s, double t) {
    return from_angles(2.0 * std::numbers::pi * s, 2.0 * std::numbers::pi * t);
  }

  static Point tangent_projection(const Point& x, const Point& v) {
    Point out = v;
    const double a = v[0] * x[0] + v[1] * x[1];
    const double b = v[2] * x[2] + v[3] * x[3];
    out[0] -= a * x[0];
    out[1] -= a * x[1];
    out[2] -= b * x[2];
    out[3] -= b * x[3];
    return out;
  }

  /// e1 = d/du, e2 = d/dv (both unit length).
  static Frame tangent_frame(const Point& x) {
    return {Point(-x[1], x[0], 0.0, 0.0), Point(0.0, 0.0, -x[3], x[2])};
  }

  static Point exp_polar(const Point& x, const Frame&, double r, double theta) {
    const auto [u, v] = angles(x);
    return from_angles(u + r * std::cos(theta), v + r * std::sin(theta));
  }

  static double polar_jacobian(double r) { return r; }

  static double polar_area(double a, double b) { return 0.5 * (b * b - a * a); }

  /// Valid while r_max + radius < pi, where only the nearest image of y can
  /// reach the ray segment.
  static RadialIntervals ray_ball_intervals(const Point& x, const Frame&, double theta,
                                            const Point& y, double radius, double r_max) {
    RadialIntervals out;
    const auto [ux, vx] = angles(x);
    const auto [uy, vy] = angles(y);
    const double du = wrap(uy - ux);
    const double dv = wrap(vy - vx);
    const double b = std::cos(theta) * du + std::sin(theta) * dv;
    const double disc = b * b - (du * du + dv * dv) + radius * radius;
    if (disc < 0.0) return out;
    const double s = std::sqrt(disc);
    out.add(std::max(0.0, b - s), std::min(r_max, b + s));
    return out;
  }

  /// Euclidean balls in R^4 are not geodesic disks on this embedding; the
  /// chordal radius is used as the geodesic radius.
  static double chord_to_geodesic(double r) { return r; }

  static double direction_angle(const Point& x, const Frame&, const Point& y) {
    const auto [ux, vx] = angles(x);
    const auto [uy, vy] = angles(y);
    return std::atan2(wrap(vy - vx), wrap(uy - ux));
  }

  static double vertex_angle(double a, double d, double b) {
    const double c = (a * a + d * d - b * b) / (2.0 * a * d);
    return std::abs(c) <= 1.0 ? std::acos(c) : std::numeric_limits<double>::quiet_NaN();
  }

  static double tangent_angle(double d, double b) {
    return d > b ? std::asin(b / d) : std::numeric_limits<double>::quiet_NaN();
  }

  /// Planar lens area; valid while a + b < pi.
  static double ball_intersection_area(double d, double a, double b) {
    if (d >= a + b) return 0.0;
    const double lo = std::min(a, b);
    if (d <= std::abs(a - b)) return std::numbers::pi * lo * lo;
    const auto clamp_acos = [](double v) { return std::acos(std::clamp(v, -1.0, 1.0)); };
    const double k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b);
    return a * a * clamp_acos((d * d + a * a - b * b) / (2.0 * d * a)) +
           b * b * clamp_acos((d * d + b * b - a * a) / (2.0 * d * b)) - 0.5 * std::sqrt(std::max(0.0, k));
  }
};

/// Throws OffManifold when x is farther than the membership tolerance from M.
template <class M>
typename M::Point require_on_manifold(const typename M::Point& x) {
  const double residual = M::embedding_residual(x);
  if (!(residual <= kManifoldTolerance))
    throw OffManifold("embedding residual " + std::to_string(residual) + " exceeds tolerance");
  return M::project(x);
}

/// Geodesic distance with membership checks on both arguments.
template <class M>
double geodesic_distance(const typename M::Point& x, const typename M::Point& y) {
  return M::geodesic_distance(require_on_manifold<M>(x), require_on_manifold<M>(y));
}

template <class M>
typename M::Point point_from_span(std::span<const double> coords) {
  if (coords.size() != static_cast<std::size_t>(M::ambient_dim))
    throw InvalidParams("point dimension does not match the model");
  typename M::Point p;
  for (int i = 0; i < M::ambient_dim; ++i) p[i] = coords[i];
  return p;
}

}  // namespace snnlap
