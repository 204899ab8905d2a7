#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snnlap/sampling.hpp"
#include "snnlap/spectral.hpp"

using namespace snnlap;

namespace {

/// Uniform sphere samples restricted to the two polar caps |x3| > 0.8.
PointCloud two_caps(std::size_t draws, std::uint64_t seed) {
  const auto all = sample_iid(Density<Sphere2>::uniform(), draws, seed);
  std::vector<double> coords;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto p = all[i];
    if (std::abs(p[2]) > 0.8) coords.insert(coords.end(), p.begin(), p.end());
  }
  return PointCloud(3, std::move(coords));
}

void expect_rayleigh_consistent(const SnnGraph& g, const EigenResult& r) {
  for (std::size_t j = 0; j < r.eigenvalues.size(); ++j) {
    const auto& v = r.eigenvectors[j];
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x / static_cast<double>(v.size());
    EXPECT_NEAR(norm2, 1.0, 1e-12);
    const double q = graph_dirichlet_form(g, v) / norm2;
    EXPECT_NEAR(q, r.eigenvalues[j], std::max(1e-8 * std::abs(r.eigenvalues[j]), 1e-12 * snn_operator(g).norm_bound))
        << "pair " << j;
  }
}

}  // namespace

TEST(SmallestEigenpairs, PathGraphMatchesDenseOracle) {
  const auto g = SnnGraph::from_counts(4, 1, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 3; ++i) W(i, i + 1) = W(i + 1, i) = 1.0;
  W /= 4.0;
  const Eigen::MatrixXd L = g.snn_factor() * (Eigen::MatrixXd(W.rowwise().sum().asDiagonal()) - W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(L);
  for (auto method : {EigenMethod::Dense, EigenMethod::Krylov}) {
    EigenOptions opt;
    opt.method = method;
    const auto r = smallest_eigenpairs(g, 4, opt);
    ASSERT_TRUE(r.converged);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(r.eigenvalues[j], oracle.eigenvalues()[j], 1e-10 * g.snn_factor());
    // path eigenvalues are simple, so the vectors agree up to the fixed sign and scale
    for (int j = 1; j < 4; ++j) {
      Eigen::VectorXd o = oracle.eigenvectors().col(j);
      const Eigen::Map<const Eigen::VectorXd> v(r.eigenvectors[j].data(), 4);
      EXPECT_NEAR(std::abs(o.normalized().dot(v.normalized())), 1.0, 1e-10);
    }
  }
}

TEST(SmallestEigenpairs, ConstantVectorAtZero) {
  const auto cloud = sample_iid(Density<Sphere2>::uniform(), 400, 3);
  NeighborIndex idx(cloud);
  const auto g = build_snn_graph(idx, 10);
  const auto r = smallest_eigenpairs(g, 3);
  EXPECT_EQ(r.method_used, EigenMethod::Dense);
  const double bound = snn_operator(g).norm_bound;
  EXPECT_LE(std::abs(r.eigenvalues[0]), 1e-10 * bound);
  for (double x : r.eigenvectors[0]) EXPECT_NEAR(x, 1.0, 1e-8);
  EXPECT_LE(r.residual_norms[0], 1e-8 * bound);
  EXPECT_GT(r.eigenvalues[1], 1e-6 * bound);
  expect_rayleigh_consistent(g, r);
}

TEST(SmallestEigenpairs, KrylovMatchesDense) {
  const auto cloud = sample_iid(Density<FlatTorus2>::uniform(), 700, 4);
  NeighborIndex idx(cloud);
  const auto g = build_snn_graph(idx, 14);
  EigenOptions dense_opt, krylov_opt;
  dense_opt.method = EigenMethod::Dense;
  krylov_opt.method = EigenMethod::Krylov;
  const auto d = smallest_eigenpairs(g, 6, dense_opt);
  const auto k = smallest_eigenpairs(g, 6, krylov_opt);
  ASSERT_TRUE(k.converged);
  EXPECT_EQ(k.method_used, EigenMethod::Krylov);
  const double bound = snn_operator(g).norm_bound;
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(k.eigenvalues[j], d.eigenvalues[j], 1e-8 * bound);
    EXPECT_LE(k.residual_norms[j], 1e-7 * bound);
  }
  expect_rayleigh_consistent(g, k);
}

TEST(SmallestEigenpairs, DeterministicForSeed) {
  const auto cloud = sample_iid(Density<Sphere2>::uniform(), 800, 5);
  NeighborIndex idx(cloud);
  const auto g = build_snn_graph(idx, 12);
  const auto a = smallest_eigenpairs(g, 4), b = smallest_eigenpairs(g, 4);
  EXPECT_EQ(a.method_used, EigenMethod::Krylov);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(SmallestEigenpairs, ZeroMultiplicityEqualsComponentCount) {
  const auto cloud = two_caps(6000, 7);
  ASSERT_GT(cloud.size(), 500u);
  NeighborIndex idx(cloud);
  for (auto assembly : {Assembly::Materialized, Assembly::Factored}) {
    const auto g = build_snn_graph(idx, 8, {}, assembly);
    const auto comps = connected_components(g);
    ASSERT_EQ(comps.count, 2u);
    const bool north0 = cloud[0][2] > 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      ASSERT_EQ(comps.labels[i] == comps.labels[0], (cloud[i][2] > 0) == north0) << i;
    const auto r = smallest_eigenpairs(g, 4);
    ASSERT_TRUE(r.converged);
    const double bound = snn_operator(g).norm_bound;
    std::size_t zeros = 0;
    for (double l : r.eigenvalues) zeros += std::abs(l) <= 1e-10 * bound;
    EXPECT_EQ(zeros, comps.count);
    expect_rayleigh_consistent(g, r);
  }
}

TEST(SmallestEigenpairs, RejectsBadCount) {
  const auto g = SnnGraph::from_counts(3, 1, {{0, 1, 1}});
  EXPECT_THROW(smallest_eigenpairs(g, 0), InvalidParams);
  EXPECT_THROW(smallest_eigenpairs(g, 4), InvalidParams);
  EXPECT_NO_THROW(smallest_eigenpairs(g, 3));
}

TEST(SmallestEigenpairs, IterationCapFlagsPartialResult) {
  const auto cloud = sample_iid(Density<Sphere2>::uniform(), 900, 6);
  NeighborIndex idx(cloud);
  const auto g = build_snn_graph(idx, 12);
  EigenOptions opt;
  opt.method = EigenMethod::Krylov;
  opt.max_restarts = 1;
  opt.krylov_depth = 2;
  opt.tol = 1e-14;
  const auto r = smallest_eigenpairs(g, 4, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.eigenvalues.size(), 4u);
}

TEST(ConnectedComponents, EmptyAndComplete) {
  EXPECT_EQ(connected_components(SnnGraph::from_counts(5, 1, {})).count, 5u);
  std::vector<std::array<std::uint32_t, 3>> all;
  for (std::uint32_t i = 0; i < 5; ++i)
    for (std::uint32_t j = i + 1; j < 5; ++j) all.push_back({i, j, 1});
  const auto c = connected_components(SnnGraph::from_counts(5, 1, all));
  EXPECT_EQ(c.count, 1u);
  for (auto l : c.labels) EXPECT_EQ(l, 0u);
}

TEST(ConnectedComponents, LabelsByFirstAppearance) {
  const auto c = connected_components(SnnGraph::from_counts(6, 1, {{1, 4, 1}, {2, 5, 1}, {0, 3, 1}}));
  EXPECT_EQ(c.count, 3u);
  EXPECT_EQ(c.labels, (std::vector<std::uint32_t>{0, 1, 2, 0, 1, 2}));
}
