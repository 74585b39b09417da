#include "iedd/toeplitz.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace iedd;

namespace {

Vector randn(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(ToeplitzMatvec, EmbeddingSize) {
  const ToeplitzMatvec t(KernelOperator(Grid(2, 2)));
  EXPECT_EQ(t.embedding_extent(), 4);
  EXPECT_EQ(t.generator().size(), 16u);
}

TEST(ToeplitzMatvec, DcSymbolIsGeneratorSum) {
  const ToeplitzMatvec t(KernelOperator(Grid(2, 8)));
  double sum = 0.0;
  for (double g : t.generator()) sum += g;
  EXPECT_NEAR(t.symbol()[0].real(), sum, 1e-13 * std::abs(sum));
  EXPECT_NEAR(t.symbol()[0].imag(), 0.0, 1e-13);
}

TEST(ToeplitzMatvec, ZeroAndUnitVectors) {
  const KernelOperator op(Grid(2, 8));
  const ToeplitzMatvec t(op);
  EXPECT_EQ(t.apply(Vector(Vector::Zero(op.size()))).norm(), 0.0);
  Vector e = Vector::Zero(op.size());
  e[0] = 1.0;
  const IndexSet first{0};
  IndexSet all(static_cast<std::size_t>(op.size()));
  for (Index i = 0; i < op.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  const Vector col = op.block(all, first).col(0);
  EXPECT_LE(rel(t.apply(e), col), 1e-12);
}

TEST(ToeplitzMatvec, MatchesDenseProduct) {
  const std::vector<std::pair<int, Index>> cases{{1, 32}, {2, 4}, {2, 32}, {2, 64}, {3, 4}, {3, 16}};
  for (const auto& [dim, n] : cases)
    for (NodeLayout layout : {NodeLayout::Midpoint, NodeLayout::Endpoint}) {
      const KernelOperator op(Grid(dim, n), layout);
      const ToeplitzMatvec t(op);
      const Matrix A = op.dense();
      for (unsigned s = 0; s < 3; ++s) {
        const Vector v = randn(op.size(), s + 17);
        EXPECT_LE(rel(t.apply(v), A * v), 1e-12) << dim << "D n=" << n;
      }
    }
}

TEST(ToeplitzMatvec, BlockApplyMatchesColumns) {
  const KernelOperator op(Grid(2, 16));
  const ToeplitzMatvec t(op);
  Matrix V(op.size(), 3);
  for (Index j = 0; j < 3; ++j) V.col(j) = randn(op.size(), static_cast<unsigned>(j));
  const Matrix W = t.apply(V);
  for (Index j = 0; j < 3; ++j) EXPECT_LE(rel(W.col(j), t.apply(Vector(V.col(j)))), 1e-15);
}

TEST(ToeplitzMatvec, SymmetryAndLinearity) {
  const ToeplitzMatvec t(KernelOperator(Grid(3, 8)));
  const Vector u = randn(t.size(), 1), v = randn(t.size(), 2);
  const double a = u.dot(t.apply(v)), b = t.apply(u).dot(v);
  EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
  const Vector lhs = t.apply(Vector(2.5 * u - 0.75 * v));
  const Vector rhs = 2.5 * t.apply(u) - 0.75 * t.apply(v);
  EXPECT_LE(rel(lhs, rhs), 1e-13);
}

TEST(ToeplitzMatvec, LengthMismatch) {
  const ToeplitzMatvec t(KernelOperator(Grid(2, 4)));
  EXPECT_THROW(t.apply(Vector(Vector::Zero(15))), ConfigError);
}
