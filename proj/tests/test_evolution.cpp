#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "snnlap/evolution.hpp"

using namespace snnlap;
using std::numbers::pi;

namespace {

using SP = Sphere2::Point;

const SP kX = SP(0.3, -0.4, std::sqrt(0.75));

double lens_area(double d, double r) { return 2 * r * r * std::acos(d / (2 * r)) - 0.5 * d * std::sqrt(4 * r * r - d * d); }

struct SphereCase {
  PointCloud cloud;
  NeighborIndex index;
  EvolutionContext<Sphere2> ctx;
};

std::unique_ptr<SphereCase> sphere_case(const Density<Sphere2>& d, std::size_t n, std::size_t k, std::uint64_t seed) {
  auto cloud = sample_iid(d, n, seed);
  auto c = std::make_unique<SphereCase>(SphereCase{cloud, NeighborIndex(cloud), {}});
  c->ctx = make_evolution_context(c->index, d, k);
  return c;
}

}  // namespace

TEST(BallOverlap, QuadratureMatchesClosedFormSphere) {
  const auto u = Density<Sphere2>::uniform();
  const SP y = Sphere2::project(SP(0.35, -0.3, 0.8));
  for (double a : {0.05, 0.2, 0.6, 1.5})
    for (double b : {0.05, 0.3, 1.0}) {
      const double closed = ball_overlap_mass<Sphere2>(kX, a, y, b, u);
      const double quad = ball_overlap_mass<Sphere2>(kX, a, y, b, u, KernelMethod::Quadrature);
      EXPECT_NEAR(quad, closed, 1e-8 * std::max(closed, 1e-12)) << a << ' ' << b;
    }
}

TEST(BallOverlap, QuadratureMatchesClosedFormTorus) {
  const auto u = Density<FlatTorus2>::uniform();
  const auto x = FlatTorus2::from_angles(0.1, 6.2), y = FlatTorus2::from_angles(0.3, 0.05);
  for (double a : {0.1, 0.25, 0.6})
    for (double b : {0.1, 0.4}) {
      const double closed = ball_overlap_mass<FlatTorus2>(x, a, y, b, u);
      const double quad = ball_overlap_mass<FlatTorus2>(x, a, y, b, u, KernelMethod::Quadrature);
      EXPECT_NEAR(quad, closed, 1e-8 * std::max(closed, 1e-12)) << a << ' ' << b;
    }
}

TEST(BallOverlap, TorusLensAcrossSeam) {
  const auto u = Density<FlatTorus2>::uniform();
  // the pair straddles u = 0, so the wraparound metric decides the distance
  const auto x = FlatTorus2::from_angles(2 * pi - 0.15, 1.0), y = FlatTorus2::from_angles(0.15, 1.0);
  const double r = 0.3;
  EXPECT_NEAR(ball_overlap_mass<FlatTorus2>(x, r, y, r, u), lens_area(0.3, r) / (4 * pi * pi), 1e-14);
  EXPECT_NEAR(ball_overlap_mass<FlatTorus2>(x, r, y, r, u, KernelMethod::Quadrature), lens_area(0.3, r) / (4 * pi * pi),
              1e-12);
}

TEST(BallOverlap, SphereCapOnDiagonal) {
  const auto u = Density<Sphere2>::uniform();
  for (double a : {0.01, 0.3, 2.0}) {
    const double cap = 2 * pi * (1 - std::cos(a)) / (4 * pi);
    EXPECT_NEAR(ball_overlap_mass<Sphere2>(kX, a, kX, a, u), cap, 1e-15);
    EXPECT_NEAR(ball_overlap_mass<Sphere2>(kX, a, kX, a, u, KernelMethod::Quadrature), cap, 1e-12);
  }
}

TEST(BallOverlap, DisjointIsZero) {
  const auto bump = Density<Sphere2>::smooth_bump(SP(0, 0, 1), 2.0);
  const SP y(0, 0, -1);
  EXPECT_EQ(ball_overlap_mass<Sphere2>(kX, 0.5, y, 0.5, bump), 0.0);
  const SP z = Sphere2::project(SP(0.3, -0.4, 0.5));
  const double d = Sphere2::geodesic_distance(kX, z);
  EXPECT_EQ(ball_overlap_mass<Sphere2>(kX, 0.4 * d, z, 0.6 * d, bump), 0.0);
  EXPECT_GT(ball_overlap_mass<Sphere2>(kX, 0.41 * d, z, 0.6 * d, bump), 0.0);
}

TEST(BallOverlap, BumpDensityMonteCarloCheck) {
  const auto bump = Density<Sphere2>::smooth_bump(SP(0, 0.6, 0.8), 2.0);
  const SP y = Sphere2::project(SP(0.4, -0.2, 0.8));
  const double a = 0.5, b = 0.4;
  const double quad = ball_overlap_mass<Sphere2>(kX, a, y, b, bump);
  const auto rule = monte_carlo_rule<Sphere2>(400000, 3);
  double s1 = 0, s2 = 0;
  for (const auto& z : rule.nodes) {
    const double v = (Sphere2::geodesic_distance(kX, z) <= a && Sphere2::geodesic_distance(y, z) <= b) ? bump(z) * 4 * pi : 0.0;
    s1 += v;
    s2 += v * v;
  }
  const double cnt = static_cast<double>(rule.size());
  const double mean = s1 / cnt, se = std::sqrt((s2 / cnt - mean * mean) / cnt);
  EXPECT_NEAR(quad, mean, 4 * se);
}

TEST(EvolutionContext, RadiiAndEpsStar) {
  const auto bump = Density<Sphere2>::smooth_bump(SP(0, 0.6, 0.8), 2.0);
  const auto c = sphere_case(bump, 2000, 30, 4);
  const auto& ctx = c->ctx;
  for (std::size_t i = 0; i < ctx.n; ++i) {
    ASSERT_GT(ctx.sample_eps[i], 0.0);
    ASSERT_LE(ctx.sample_eps[i], ctx.eps_star);
    ASSERT_LE(ctx.sample_eps_k[i], ctx.max_eps_k);
    ASSERT_NEAR(bump(ctx.samples[i]) * pi * std::pow(ctx.sample_eps[i], 2), 30.0 / 2000, 1e-15);
  }
  for (const auto& x : product_grid<Sphere2>(64).nodes) ASSERT_LE(ctx.eps(x), ctx.eps_star);
  const auto idx_cloud = sample_iid(bump, 10, 1);
  NeighborIndex idx(idx_cloud);
  EXPECT_THROW(make_evolution_context(idx, bump, 10), KTooLarge);
}

TEST(KernelW, DiagonalNearKOverN) {
  const auto u = Density<Sphere2>::uniform();
  const auto c = sphere_case(u, 8000, 40, 1);
  const double kn = 40.0 / 8000;
  EXPECT_NEAR(kernel_w(c->ctx, kX, kX), kn, 0.01 * kn);
  // the k-NN radius concentrates around eps at the 1/sqrt(k) scale
  EXPECT_NEAR(kernel_wk(c->ctx, kX, kX), kn, 0.5 * kn);
  double mean = 0.0;
  for (std::size_t i = 0; i < 200; ++i) mean += kernel_wk(c->ctx, c->ctx.samples[i], c->ctx.samples[i]) / 200;
  EXPECT_NEAR(mean, kn, 0.1 * kn);
}

TEST(KernelW, SymmetricForUniformDensity) {
  const auto u = Density<Sphere2>::uniform();
  const auto c = sphere_case(u, 4000, 40, 2);
  const SP y = Sphere2::project(SP(0.32, -0.38, 0.86));
  EXPECT_NEAR(kernel_w(c->ctx, kX, y), kernel_w(c->ctx, y, kX), 1e-16);
  EXPECT_LE(kernel_w(c->ctx, kX, y), kernel_w(c->ctx, kX, kX));
  EXPECT_THROW(kernel_w(c->ctx, SP(1, 1, 1), y), OffManifold);
}

TEST(OmegaDiagonal, ShrinksQuadraticallyInEps) {
  for (const auto& d : {Density<Sphere2>::uniform(), Density<Sphere2>::smooth_bump(SP(0, 0.6, 0.8), 2.0)}) {
    double prev = 0.0;
    for (std::size_t n : {2000u, 8000u, 32000u}) {
      const auto c = sphere_case(d, n, 40, 1);
      const double dev = std::abs(omega_diagonal_deviation(c->ctx, kX));
      const double e = c->ctx.eps(kX);
      EXPECT_LE(dev, 0.5 * e * e);
      if (prev > 0.0) EXPECT_LT(dev, 0.3 * prev);
      prev = dev;
    }
  }
}

TEST(Operators, AnnihilateConstantsExactly) {
  const auto bump = Density<Sphere2>::smooth_bump(SP(0, 0.6, 0.8), 2.0);
  const auto c = sphere_case(bump, 2000, 30, 5);
  const auto one = constant_function<Sphere2>(3.25);
  EXPECT_EQ(op_L1(c->ctx, one, kX), 0.0);
  EXPECT_EQ(op_Lsharp(c->ctx, one, kX), 0.0);
  EXPECT_EQ(op_L2(c->ctx, one, kX), 0.0);
}

TEST(Operators, SignFlipExact) {
  const auto u = Density<Sphere2>::uniform();
  const auto c = sphere_case(u, 3000, 30, 6);
  for (const char* id : {"x3", "x1x2"}) {
    const auto f = make_test_function<Sphere2>(id);
    auto neg = f;
    neg.value = [v = f.value](const SP& x) { return -v(x); };
    for (auto op : {&op_L1<Sphere2>, &op_Lsharp<Sphere2>, &op_L2<Sphere2>}) {
      const double a = op(c->ctx, f, kX), b = op(c->ctx, neg, kX);
      EXPECT_EQ(a, -b) << id;
      EXPECT_NE(a, 0.0);
    }
  }
}

TEST(Operators, Additive) {
  const auto u = Density<Sphere2>::uniform();
  const auto c = sphere_case(u, 3000, 30, 7);
  const auto f = make_test_function<Sphere2>("x3"), g = make_test_function<Sphere2>("x1x2");
  auto sum = f;
  sum.value = [a = f.value, b = g.value](const SP& x) { return a(x) + b(x); };
  for (auto op : {&op_L1<Sphere2>, &op_Lsharp<Sphere2>, &op_L2<Sphere2>}) {
    const double lhs = op(c->ctx, sum, kX), rhs = op(c->ctx, f, kX) + op(c->ctx, g, kX);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(lhs) + 1));
  }
}

TEST(OpL2, ApproachesRescaledLimitAtSecondOrder) {
  // uniform sphere: L2 x3 -> (alpha / 2^{m+1}) (1/(m+2)) Delta^snn x3 = (pi^2 / 8) x3
  const auto u = Density<Sphere2>::uniform();
  const auto f = make_test_function<Sphere2>("x3");
  const double limit = pi * pi / 8 * kX[2];
  double prev = 0.0;
  for (std::size_t n : {2000u, 8000u, 32000u}) {
    const auto c = sphere_case(u, n, 40, 1);
    const double dev = std::abs(op_L2(c->ctx, f, kX) - limit);
    const double e = c->ctx.eps(kX);
    EXPECT_LE(dev, 0.5 * e * e) << n;
    if (prev > 0.0) EXPECT_LT(dev, 0.3 * prev);
    prev = dev;
  }
}

TEST(OpL2, RefinementResolvesVaryingEps) {
  // bump density: eps varies several-fold, so the default grid has to refine near the peak
  const auto bump = Density<Sphere2>::smooth_bump(SP(0, 0.6, 0.8), 1.0);
  auto c = sphere_case(bump, 4000, 40, 2);
  const auto f = make_test_function<Sphere2>("x1x2");
  const SP peak = Sphere2::project(SP(0.05, 0.6, 0.8));
  const double coarse = op_L2(c->ctx, f, peak);
  c->ctx.l2 = {48, 300, true};
  // w(x, .) has kinks on the ball boundaries, so grids agree only at the 1e-3 level
  EXPECT_NEAR(op_L2(c->ctx, f, peak), coarse, 1e-3 * std::abs(coarse));
  c->ctx.l2 = {32, 160, false};
  EXPECT_THROW(op_L2(c->ctx, f, peak), QuadratureTooCoarse);
}

TEST(OpL2, CoarseGridThrows) {
  const auto u = Density<Sphere2>::uniform();
  auto c = sphere_case(u, 2000, 30, 1);
  c->ctx.l2 = {4, 160, false};
  EXPECT_THROW(op_L2(c->ctx, make_test_function<Sphere2>("x3"), kX), QuadratureTooCoarse);
  c->ctx.l2 = {32, 8, false};
  EXPECT_THROW(op_L2(c->ctx, make_test_function<Sphere2>("x3"), kX), QuadratureTooCoarse);
}

TEST(OpL1, TorusSumMatchesDirectKernelLoop) {
  const auto u = Density<FlatTorus2>::uniform();
  const auto cloud = sample_iid(u, 1500, 3);
  NeighborIndex idx(cloud);
  const auto ctx = make_evolution_context(idx, u, 25);
  const auto f = make_test_function<FlatTorus2>("cos_u_cos_v");
  const auto x = FlatTorus2::from_angles(0.05, 6.25);
  double s = 0.0;
  for (std::size_t i = 0; i < ctx.n; ++i) s += kernel_wk(ctx, x, ctx.samples[i]) * (f(x) - f(ctx.samples[i]));
  const double ratio = pi * 1500 / 25.0;
  const double expected = ratio * ratio / (16 * 25.0) * s;
  EXPECT_NEAR(op_L1(ctx, f, x), expected, 1e-10 * std::abs(expected));
}
