#include "iedd/rskel.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace iedd;

namespace {

Matrix randn(Index r, Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = d(rng);
  return M;
}

double inverse_error(const KernelOperator& op, const SkelFactor& F, unsigned seed) {
  const Matrix V = randn(op.size(), 5, seed);
  const Matrix W = F.apply_inverse(Matrix(op.dense() * V));
  return (W - V).norm() / V.norm();
}

}  // namespace

TEST(BoxTree, GlobalQuadtreeLevels) {
  const BoxTree t = global_tree(Partitioning(Grid(2, 16), 4));
  ASSERT_EQ(t.num_levels(), 3);
  EXPECT_EQ(t.levels[0].size(), 16u);
  EXPECT_EQ(t.levels[1].size(), 4u);
  EXPECT_EQ(t.levels[2].size(), 1u);
  for (Index b : t.levels[1]) EXPECT_EQ(t.boxes[static_cast<std::size_t>(b)].children.size(), 4u);
  EXPECT_EQ(t.mode, TreeMode::Global);
}

TEST(BoxTree, ColoredLevels) {
  const BoxTree t = colored_tree(Partitioning(Grid(2, 32), 4), 1, 0);
  ASSERT_EQ(t.num_levels(), 2);
  EXPECT_EQ(t.levels[0].size(), 4u);
  const BoxTree t3 = colored_tree(Partitioning(Grid(3, 16), 4), 1, 5);
  ASSERT_EQ(t3.num_levels(), 2);
  EXPECT_EQ(t3.levels[0].size(), 8u);
}

TEST(BoxTree, LeavesPartitionOwnedDofs) {
  const Grid g(2, 32);
  for (int color = 0; color < 4; ++color) {
    const BoxTree t = colored_tree(Partitioning(g, 8), 1, color);
    IndexSet all;
    for (Index b : t.levels[0]) {
      const IndexSet& d = t.boxes[static_cast<std::size_t>(b)].dofs;
      all.insert(all.end(), d.begin(), d.end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_TRUE(std::adjacent_find(all.begin(), all.end()) == all.end());
    EXPECT_EQ(all, t.dofs);
  }
  const BoxTree gt = global_tree(Partitioning(g, 8));
  EXPECT_EQ(static_cast<Index>(gt.dofs.size()), g.size());
}

TEST(BoxTree, RejectsNonPowerOfTwo) {
  EXPECT_THROW(global_tree(Partitioning(Grid(2, 12), 3)), ConfigError);
  EXPECT_THROW(colored_tree(Partitioning(Grid(2, 12), 3), 1, 0), ConfigError);
}

TEST(ProxyPoints, OnSphereOfRadius) {
  for (int dim : {2, 3}) {
    const Point c{0.5, 0.5, dim == 3 ? 0.5 : 0.0};
    const std::vector<Point> p = proxy_points(dim, c, 0.3, dim == 2 ? 64 : 288);
    for (const Point& x : p) EXPECT_NEAR(distance(x, c, dim), 0.3, 1e-14);
  }
}

TEST(Factorize, ExactLimit) {
  const KernelOperator op(Grid(2, 8));
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 4)), 1e-15);
  EXPECT_LE(inverse_error(op, F, 1), 1e-10);
}

TEST(Factorize, InverseAccuracyAtLooseEps) {
  const KernelOperator op(Grid(2, 16), NodeLayout::Endpoint);
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 4)), 1e-3);
  EXPECT_LE(inverse_error(op, F, 2), 0.1);
  EXPECT_LT(F.stats().S, op.size());
}

TEST(Factorize, ZeroAndLinearity) {
  const KernelOperator op(Grid(2, 16));
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 4)), 1e-3);
  EXPECT_EQ(F.apply_inverse(Vector(Vector::Zero(op.size()))).norm(), 0.0);
  const Vector a = randn(op.size(), 1, 3).col(0), b = randn(op.size(), 1, 4).col(0);
  const Vector lhs = F.apply_inverse(Vector(3.0 * a - 2.0 * b));
  const Vector rhs = 3.0 * F.apply_inverse(a) - 2.0 * F.apply_inverse(b);
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(Factorize, ForwardOperatorIsSymmetricAndClose) {
  for (int dim : {2, 3}) {
    const KernelOperator op(Grid(dim, dim == 2 ? 32 : 8));
    const double eps = 1e-4;
    const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 4)), eps);
    const Matrix A = op.dense();
    const Matrix U = randn(op.size(), 4, 5);
    const Matrix FU = F.apply_forward(U);
    EXPECT_LE((FU - A * U).norm(), 100.0 * eps * A.norm() * U.norm());
    const Matrix G = U.transpose() * FU;
    EXPECT_LE((G - G.transpose()).norm(), 1e-12 * G.norm());
    EXPECT_LE((F.apply_inverse(FU) - U).norm(), 1e-10 * U.norm());
  }
}

TEST(Factorize, InverseApplyIsPositive) {
  const KernelOperator op(Grid(2, 32), NodeLayout::Endpoint);
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 8)), 1e-3);
  const Matrix X = randn(op.size(), 50, 6);
  const Matrix Y = F.apply_inverse(X);
  for (Index j = 0; j < 50; ++j) EXPECT_GT(X.col(j).dot(Y.col(j)), 0.0);
}

TEST(Factorize, StatsAreConsistent) {
  const KernelOperator op(Grid(2, 32));
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), 8)), 1e-3);
  const SkelStats& s = F.stats();
  ASSERT_FALSE(s.dofs_per_level.empty());
  EXPECT_EQ(s.dofs_per_level.front(), op.size());
  Index eliminated = 0;
  for (const SkelStep& st : F.steps()) eliminated += static_cast<Index>(st.r.size());
  EXPECT_EQ(s.S, op.size() - eliminated);
  EXPECT_GT(s.memory_bytes, 0u);
  EXPECT_GT(s.max_leaf_rank, 0);
}

TEST(Factorize, ColoredSecondLevelBoundedByLeafRanks) {
  const KernelOperator op(Grid(2, 64));
  const BoxTree t = colored_tree(Partitioning(op.grid(), 16), 1, 0);
  const SkelFactor F = factorize(op, t, 1e-3);
  ASSERT_GE(F.stats().dofs_per_level.size(), 2u);
  EXPECT_LE(F.stats().dofs_per_level[1],
            F.stats().max_leaf_rank * static_cast<Index>(t.levels[0].size()));
}

TEST(Factorize, ColoredLeafRankIndependentOfN) {
  std::vector<Index> ranks;
  for (auto [n, m] : {std::pair<Index, Index>{64, 16}, {128, 32}}) {
    const KernelOperator op(Grid(2, n), NodeLayout::Endpoint);
    ranks.push_back(factorize(op, colored_tree(Partitioning(op.grid(), m), 1, 0), 1e-3).stats().max_leaf_rank);
  }
  EXPECT_LE(std::abs(ranks[0] - ranks[1]), 3) << ranks[0] << " vs " << ranks[1];
}

TEST(Factorize, GlobalLeafRankGrowsWithBoundary) {
  const KernelOperator op(Grid(2, 128), NodeLayout::Endpoint);
  const Index small = factorize(op, global_tree(Partitioning(op.grid(), 16)), 1e-3).stats().max_leaf_rank;
  const Index large = factorize(op, global_tree(Partitioning(op.grid(), 8)), 1e-3).stats().max_leaf_rank;
  const double ratio = static_cast<double>(large) / static_cast<double>(small);
  EXPECT_GE(ratio, 1.5) << small << " -> " << large;
  EXPECT_LE(ratio, 2.5) << small << " -> " << large;
}

TEST(Factorize, Preconditions) {
  const KernelOperator op(Grid(2, 8));
  const BoxTree t = global_tree(Partitioning(op.grid(), 2));
  EXPECT_THROW(factorize(op, t, 0.0), ConfigError);
  EXPECT_THROW(factorize(op, t, 1.5), ConfigError);
  ProxyConfig bad;
  bad.radius_factor = 0.9;
  EXPECT_THROW(factorize(op, t, 1e-3, bad), ConfigError);
  const SkelFactor F = factorize(op, t, 1e-3);
  EXPECT_THROW(F.apply_inverse(Vector(Vector::Ones(3))), ConfigError);
}
