#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"

namespace snnlap {

/// A smooth function on M with closed-form intrinsic gradient and Laplacian
/// (Laplacian = div grad, so it is negative semidefinite).
template <class M>
struct TestFunction {
  using Point = typename M::Point;

  std::string name;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<double(const Point&)> laplacian;
  double c3_bound = 0.0;  // bound on the C^3 norm

  double operator()(const Point& x) const { return value(x); }
};

template <class M>
std::vector<std::string> registered_test_functions();

template <>
inline std::vector<std::string> registered_test_functions<Sphere2>() {
  return {"constant", "x1", "x2", "x3", "x1x2"};
}

template <>
inline std::vector<std::string> registered_test_functions<FlatTorus2>() {
  return {"constant", "cos_u", "sin_v", "cos_u_cos_v", "cos_2u"};
}

template <class M>
TestFunction<M> constant_function(double c = 1.0) {
  using P = typename M::Point;
  return {"constant", [c](const P&) { return c; }, [](const P&) { return P::Zero().eval(); },
          [](const P&) { return 0.0; }, std::abs(c)};
}

template <class M>
TestFunction<M> make_test_function(std::string_view id);

template <>
inline TestFunction<Sphere2> make_test_function<Sphere2>(std::string_view id) {
  using P = Sphere2::Point;
  if (id == "constant") return constant_function<Sphere2>();
  if (id == "x1" || id == "x2" || id == "x3") {
    const int axis = id[1] - '1';
    // Restrictions of linear functions are degree-1 spherical harmonics.
    return {std::string(id), [axis](const P& x) { return x[axis]; },
            [axis](const P& x) { return Sphere2::tangent_projection(x, P::Unit(axis)).eval(); },
            [axis](const P& x) { return -2.0 * x[axis]; }, 4.0};
  }
  if (id == "x1x2") {
    return {"x1x2", [](const P& x) { return x[0] * x[1]; },
            [](const P& x) { return Sphere2::tangent_projection(x, P(x[1], x[0], 0.0)).eval(); },
            [](const P& x) { return -6.0 * x[0] * x[1]; }, 12.0};
  }
  throw InvalidParams("unknown sphere test function '" + std::string(id) + "'");
}

template <>
inline TestFunction<FlatTorus2> make_test_function<FlatTorus2>(std::string_view id) {
  using P = FlatTorus2::Point;
  using T = FlatTorus2;
  if (id == "constant") return constant_function<FlatTorus2>();
  if (id == "cos_u") {
    return {"cos_u", [](const P& x) { return x[0]; },
            [](const P& x) { return (-x[1] * T::tangent_frame(x).e1).eval(); },
            [](const P& x) { return -x[0]; }, 4.0};
  }
  if (id == "sin_v") {
    return {"sin_v", [](const P& x) { return x[3]; },
            [](const P& x) { return (x[2] * T::tangent_frame(x).e2).eval(); },
            [](const P& x) { return -x[3]; }, 4.0};
  }
  if (id == "cos_u_cos_v") {
    return {"cos_u_cos_v", [](const P& x) { return x[0] * x[2]; },
            [](const P& x) {
              const auto f = T::tangent_frame(x);
              return (-x[1] * x[2] * f.e1 - x[0] * x[3] * f.e2).eval();
            },
            [](const P& x) { return -2.0 * x[0] * x[2]; }, 7.0};
  }
  if (id == "cos_2u") {
    // cos 2u = cos^2 u - sin^2 u
    return {"cos_2u", [](const P& x) { return x[0] * x[0] - x[1] * x[1]; },
            [](const P& x) { return (-4.0 * x[0] * x[1] * T::tangent_frame(x).e1).eval(); },
            [](const P& x) { return -4.0 * (x[0] * x[0] - x[1] * x[1]); }, 15.0};
  }
  throw InvalidParams("unknown torus test function '" + std::string(id) + "'");
}

}  // namespace snnlap
