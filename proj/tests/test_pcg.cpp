#include "iedd/pcg.hpp"
#include "iedd/preconditioner.hpp"
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

LinearMap dense_map(const Matrix& A) {
  return [&A](const Vector& x) { return Vector(A * x); };
}

LinearMap identity() {
  return [](const Vector& x) { return x; };
}

}  // namespace

TEST(Pcg, OneByOneConvergesInOneStep) {
  const Matrix A = Matrix::Constant(1, 1, 3.0);
  const PcgResult r = pcg(dense_map(A), identity(), Vector::Constant(1, 6.0));
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.n_it, 1);
  EXPECT_NEAR(r.u[0], 2.0, 1e-15);
}

TEST(Pcg, ZeroRhs) {
  const Matrix A = Matrix::Identity(4, 4);
  const PcgResult r = pcg(dense_map(A), identity(), Vector::Zero(4));
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.n_it, 0);
  EXPECT_EQ(r.u.norm(), 0.0);
}

TEST(Pcg, ReportInvariants) {
  const KernelOperator op(Grid(2, 16));
  const ToeplitzMatvec A(op);
  PrecondOptions o;
  o.kind = PrecondKind::Schwarz;
  o.m = 2;
  const Preconditioner P = Preconditioner::build(op, o);
  const PcgResult r = pcg([&](const Vector& x) { return A.apply(x); }, [&](const Vector& x) { return P.apply(x); },
                          randn(op.size(), 1));
  const PcgReport& rep = r.report;
  EXPECT_TRUE(rep.converged);
  EXPECT_FALSE(rep.stagnated);
  EXPECT_EQ(static_cast<Index>(rep.residual_history.size()), rep.n_it + 1);
  EXPECT_EQ(rep.achieved_residual, rep.residual_history.back());
  EXPECT_LE(rep.achieved_residual, 1e-12);
  EXPECT_LE(rep.true_residual, 1e-10);
  EXPECT_GT(rep.t_s, 0.0);
}

TEST(Pcg, UnpreconditionedWithinTwoN) {
  const KernelOperator op(Grid(2, 8));
  const Matrix A = op.dense();
  PcgOptions o;
  o.max_iters = 2 * op.size();
  o.stagnation_window = 0;
  o.tol = 1e-10;
  const PcgResult r = pcg(dense_map(A), identity(), randn(op.size(), 2), o);
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE(r.report.n_it, 2 * op.size());
}

TEST(Pcg, EnergyErrorIsMonotone) {
  const KernelOperator op(Grid(2, 16));
  const Matrix A = op.dense();
  const Vector f = randn(op.size(), 3);
  const Vector ustar = A.llt().solve(f);
  PrecondOptions po;
  po.kind = PrecondKind::Jacobi;
  po.m = 2;
  const Preconditioner P = Preconditioner::build(op, po);
  std::vector<double> energy;
  for (Index k = 1; k <= 25; ++k) {
    PcgOptions o;
    o.max_iters = k;
    const PcgResult r = pcg(dense_map(A), [&](const Vector& x) { return P.apply(x); }, f, o);
    const Vector e = r.u - ustar;
    energy.push_back(std::sqrt(e.dot(A * e)));
    if (r.report.converged) break;
  }
  for (std::size_t i = 1; i < energy.size(); ++i) EXPECT_LE(energy[i], energy[i - 1] * (1.0 + 1e-12));
}

TEST(Pcg, DeterministicIterations) {
  const KernelOperator op(Grid(2, 16));
  const ToeplitzMatvec A(op);
  PrecondOptions o;
  o.kind = PrecondKind::Cbd;
  o.m = 4;
  const Preconditioner P = Preconditioner::build(op, o);
  const Vector f = randn(op.size(), 4);
  const auto run = [&] {
    return pcg([&](const Vector& x) { return A.apply(x); }, [&](const Vector& x) { return P.apply(x); }, f);
  };
  const PcgResult a = run(), b = run();
  EXPECT_EQ(a.report.n_it, b.report.n_it);
  EXPECT_EQ(a.u, b.u);
}

TEST(Pcg, StagnationDetected) {
  // A preconditioner that never sees half of the residual: the residual plateaus.
  const KernelOperator op(Grid(2, 8));
  const Matrix A = op.dense();
  const Index half = op.size() / 2;
  const LinearMap partial = [half](const Vector& r) {
    Vector z = Vector::Zero(r.size());
    z.head(half) = r.head(half);
    return z;
  };
  PcgOptions o;
  o.max_iters = 5000;
  const PcgResult r = pcg(dense_map(A), partial, randn(op.size(), 5), o);
  EXPECT_TRUE(r.report.stagnated);
  EXPECT_FALSE(r.report.converged);
  EXPECT_GT(r.report.achieved_residual, 1e-3);
  EXPECT_LT(r.report.n_it, 5000);
}

TEST(Pcg, MaxItersCap) {
  const KernelOperator op(Grid(2, 16));
  const Matrix A = op.dense();
  PcgOptions o;
  o.max_iters = 3;
  const PcgResult r = pcg(dense_map(A), identity(), randn(op.size(), 6), o);
  EXPECT_EQ(r.report.n_it, 3);
  EXPECT_FALSE(r.report.converged);
}

TEST(Pcg, RejectsIndefiniteAndBadOptions) {
  const Matrix A = -Matrix::Identity(3, 3);
  EXPECT_THROW(pcg(dense_map(A), identity(), Vector::Ones(3)), NumericalError);
  PcgOptions o;
  o.tol = 0.0;
  EXPECT_THROW(pcg(dense_map(Matrix::Identity(3, 3)), identity(), Vector::Ones(3), o), ConfigError);
  Vector bad = Vector::Ones(3);
  bad[1] = std::nan("");
  EXPECT_THROW(pcg(dense_map(Matrix::Identity(3, 3)), identity(), bad), NumericalError);
}

TEST(Pcg, ObserverSeesEveryIteration) {
  const KernelOperator op(Grid(2, 8));
  const Matrix A = op.dense();
  Index calls = 0;
  const PcgResult r =
      pcg(dense_map(A), identity(), randn(op.size(), 7), {}, [&](Index, double) { ++calls; });
  EXPECT_EQ(calls, r.report.n_it);
}
