#include "iedd/preconditioner.hpp"

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

PrecondOptions opts(PrecondKind k, Index m, Backend b = Backend::Exact) {
  PrecondOptions o;
  o.kind = k;
  o.m = m;
  o.backend = b;
  return o;
}

}  // namespace

TEST(Preconditioner, NoneIsIdentity) {
  const KernelOperator op(Grid(2, 8));
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::None, 2));
  const Vector f = randn(op.size(), 1);
  EXPECT_EQ(p.apply(f), f);
}

TEST(Preconditioner, JacobiBlocks) {
  const KernelOperator op(Grid(2, 16));
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::Jacobi, 4));
  ASSERT_EQ(p.num_subdomains(), 16);
  for (Index i = 0; i < 16; ++i) EXPECT_EQ(p.subdomain(i).size(), 16);
}

TEST(Preconditioner, CbdExactSubproblemSizes) {
  const Grid g(2, 16);
  const KernelOperator op(g);
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::Cbd, 4));
  const Decomposition d = build_decomposition(g, 4, 1, DecompositionKind::Cbd);
  ASSERT_EQ(p.num_subdomains(), 4);
  for (Index i = 0; i < 4; ++i) {
    // Union of four 4x4 partitions dilated by one layer, clipped at the boundary.
    Index brute = 0;
    for (Index j = 0; j < g.size(); ++j) {
      const MultiIndex x = g.multi_index(j);
      bool in_some = false;
      for (Index q : d.members[static_cast<std::size_t>(i)]) {
        const MultiIndex a = unravel(q, 4, 2);
        bool in = true;
        for (int k = 0; k < 2; ++k) in = in && x[k] >= 4 * a[k] - 1 && x[k] <= 4 * a[k] + 4;
        in_some = in_some || in;
      }
      brute += in_some;
    }
    EXPECT_EQ(p.subdomain(i).size(), brute);
  }
  EXPECT_EQ(p.subdomain(0).size(), 121);  // lattice (0,0),(2,0),(0,2),(2,2): 5x5 + 6x5 + 5x6 + 6x6
}

TEST(Preconditioner, SingleSubdomainIsExactInverse) {
  const Grid g(2, 16);
  const KernelOperator op(g);
  IndexSet all(static_cast<std::size_t>(g.size()));
  for (Index i = 0; i < g.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  const Preconditioner p = Preconditioner::from_decomposition(op, custom_decomposition(g, {all}));
  const Vector f = randn(g.size(), 2);
  EXPECT_LE((op.dense() * p.apply(f) - f).norm(), 1e-10 * f.norm());
}

TEST(Preconditioner, SymmetricPositiveForAllKinds) {
  const KernelOperator op(Grid(2, 32), NodeLayout::Endpoint);
  const std::vector<PrecondOptions> cases{
      opts(PrecondKind::Jacobi, 4),  opts(PrecondKind::Schwarz, 4),
      opts(PrecondKind::Cbd, 8),     opts(PrecondKind::Cbd, 8, Backend::Rskel),
      opts(PrecondKind::Schwarz, 4, Backend::Rskel), opts(PrecondKind::RsGlobal, 8)};
  for (const PrecondOptions& o : cases) {
    const Preconditioner p = Preconditioner::build(op, o);
    for (unsigned s = 0; s < 5; ++s) {
      const Vector u = randn(op.size(), 10 + s), v = randn(op.size(), 20 + s);
      const double a = p.apply(u).dot(v), b = u.dot(p.apply(v));
      EXPECT_NEAR(a, b, 1e-10 * std::abs(a)) << to_string(o.kind) << " " << to_string(o.backend);
      EXPECT_GT(u.dot(p.apply(u)), 0.0);
    }
  }
}

TEST(Preconditioner, RskelBackendTracksExact) {
  const KernelOperator op(Grid(2, 64), NodeLayout::Endpoint);
  const Preconditioner exact = Preconditioner::build(op, opts(PrecondKind::Cbd, 8));
  const Preconditioner fast = Preconditioner::build(op, opts(PrecondKind::Cbd, 8, Backend::Rskel));
  EXPECT_EQ(fast.num_subdomains(), 4);
  EXPECT_GT(fast.stats().S, 0);
  const Vector f = randn(op.size(), 3);
  const Vector a = exact.apply(f), b = fast.apply(f);
  EXPECT_LE((a - b).norm(), 0.1 * a.norm());
}

TEST(Preconditioner, ProjectionsAreIdempotent) {
  const Grid g(2, 16);
  const KernelOperator op(g);
  const Matrix A = op.dense();
  for (PrecondKind k : {PrecondKind::Schwarz, PrecondKind::Cbd}) {
    const Preconditioner p = Preconditioner::build(op, opts(k, 4));
    for (Index i = 0; i < p.num_subdomains(); i += 3) {
      const auto P = [&](const Vector& v) { return p.apply_subdomain(i, A * v); };
      const Vector v = randn(g.size(), static_cast<unsigned>(i) + 40);
      const Vector pv = P(v);
      EXPECT_LE((P(pv) - pv).norm(), 1e-8 * v.norm());
    }
  }
}

TEST(Preconditioner, ProjectionFixesLocalVectors) {
  const Grid g(2, 16);
  const KernelOperator op(g);
  const Matrix A = op.dense();
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::Cbd, 4));
  for (Index i = 0; i < p.num_subdomains(); ++i) {
    Vector v = Vector::Zero(g.size());
    const Vector r = randn(p.subdomain(i).size(), static_cast<unsigned>(i));
    for (Index k = 0; k < r.size(); ++k) v[p.subdomain(i).dofs()[static_cast<std::size_t>(k)]] = r[k];
    EXPECT_LE((p.apply_subdomain(i, A * v) - v).norm(), 1e-8 * v.norm());
  }
}

TEST(Preconditioner, DenseMatchesApply) {
  const KernelOperator op(Grid(2, 8));
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::Schwarz, 2));
  const Vector f = randn(op.size(), 5);
  const Vector z = p.apply(f);
  EXPECT_LE((p.dense() * f - z).norm(), 1e-13 * z.norm());
}

TEST(Preconditioner, DenseLimitNamesBackend) {
  const KernelOperator op(Grid(2, 16));
  PrecondOptions o = opts(PrecondKind::Schwarz, 2);
  o.dense_limit = 50;
  try {
    Preconditioner::build(op, o);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rskel"), std::string::npos);
  }
}

TEST(Preconditioner, LengthMismatch) {
  const KernelOperator op(Grid(2, 8));
  const Preconditioner p = Preconditioner::build(op, opts(PrecondKind::Jacobi, 2));
  EXPECT_THROW(p.apply(Vector(Vector::Ones(10))), ConfigError);
}

TEST(Preconditioner, ParseNames) {
  EXPECT_EQ(parse_precond_kind("rs-global"), PrecondKind::RsGlobal);
  EXPECT_EQ(parse_backend("rskel"), Backend::Rskel);
  EXPECT_THROW(parse_precond_kind("ilu"), ConfigError);
  EXPECT_THROW(parse_backend("gpu"), ConfigError);
}
