#pragma once

// Spectrum of the preconditioned operator T^{-1} A.
//
// Dense route: with T^{-1} = G G^T (Cholesky), T^{-1} A is similar to the
// symmetric G^T A G. Lanczos route: T^{-1} A is self-adjoint in the A inner
// product, which gives extremal eigenvalues at sizes beyond the dense limit.

#include "iedd/pcg.hpp"
#include "iedd/preconditioner.hpp"
#include "iedd/toeplitz.hpp"

#include <random>

namespace iedd {

struct SpectrumReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Vector eigenvalues;  // ascending; empty for the Lanczos route
  Index multiplicity_at_max = 0;
  Index N = 0;
  Index D = 0;
  std::string method = "dense";
  Index iterations = 0;  // Lanczos steps
};

inline Index multiplicity_at(const SpectrumReport& rep, double value, double tol) {
  Index c = 0;
  for (Index i = 0; i < rep.eigenvalues.size(); ++i)
    if (std::abs(rep.eigenvalues[i] - value) <= tol) ++c;
  return c;
}

struct DenseSpectrum {
  SpectrumReport report;
  Matrix G;      // lower Cholesky factor of T^{-1}
  SymEigs eigs;  // of G^T A G
};

inline DenseSpectrum dense_spectrum(const KernelOperator& op, const Preconditioner& precond, bool want_vectors = false,
                                    Index dense_limit = 4096) {
  require(op.size() <= dense_limit, "dense spectrum of " + std::to_string(op.size()) +
                                        " points exceeds the dense limit " + std::to_string(dense_limit));
  require(precond.size() == op.size(), "spectrum: preconditioner size mismatch");
  DenseSpectrum out;
  const Matrix Tinv = precond.dense();
  try {
    out.G = CholeskyFactor(Tinv).lower();
  } catch (const NotPositiveDefinite& e) {
    throw NumericalError(std::string("spectrum: assembled T^{-1} is not numerically SPD (") + e.what() + ")");
  }
  Matrix AG = op.dense();
  AG = AG * out.G.triangularView<Eigen::Lower>();
  Matrix C = out.G.transpose().triangularView<Eigen::Upper>() * AG;
  C = 0.5 * (C + C.transpose()).eval();
  out.eigs = sym_eigs(C, want_vectors);
  SpectrumReport& r = out.report;
  r.eigenvalues = out.eigs.values;
  r.N = op.size();
  r.D = precond.kind() == PrecondKind::None ? 1 : precond.num_subdomains();
  r.lambda_min = r.eigenvalues[0];
  r.lambda_max = r.eigenvalues[r.eigenvalues.size() - 1];
  r.multiplicity_at_max = multiplicity_at(r, r.lambda_max, 1e-8);
  return out;
}

inline SpectrumReport preconditioned_spectrum(const KernelOperator& op, const Preconditioner& precond,
                                              Index dense_limit = 4096) {
  return dense_spectrum(op, precond, false, dense_limit).report;
}

enum class Extremal { Min, Max };

/// Unit eigenvector of T^{-1} A for the smallest or largest eigenvalue, sign
/// fixed so its largest-magnitude entry is positive.
inline Vector extremal_eigenvector(const DenseSpectrum& s, Extremal which) {
  require(s.eigs.vectors.size() > 0, "extremal_eigenvector: spectrum computed without eigenvectors");
  const Index j = which == Extremal::Min ? 0 : s.eigs.values.size() - 1;
  Vector x = s.G.triangularView<Eigen::Lower>() * s.eigs.vectors.col(j);
  x.normalize();
  Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0.0) x = -x;
  return x;
}

inline Vector extremal_eigenvector(const KernelOperator& op, const Preconditioner& precond, Extremal which) {
  return extremal_eigenvector(dense_spectrum(op, precond, true), which);
}

/// max_k |lambda_k + lambda_{N+1-k} - 2| over the sorted spectrum.
inline double pairing_defect(const Vector& ascending) {
  const Index n = ascending.size();
  double d = 0.0;
  for (Index k = 0; k < n; ++k) d = std::max(d, std::abs(ascending[k] + ascending[n - 1 - k] - 2.0));
  return d;
}

/// Pairing defect of block Jacobi with two non-overlapping subdomains.
inline double jacobi_pairing_check(const KernelOperator& op, const Decomposition& halves) {
  require(halves.size() == 2, "pairing check needs exactly two subdomains");
  const std::vector<int> cover = coverage(halves);
  for (int c : cover) require(c == 1, "pairing check needs two disjoint subdomains covering the grid");
  const Preconditioner p = Preconditioner::from_decomposition(op, halves);
  return pairing_defect(preconditioned_spectrum(op, p, std::max<Index>(4096, op.size())).eigenvalues);
}

struct LanczosOptions {
  Index max_steps = 600;
  double tol = 1e-10;  // relative Ritz residual for both extremes
  std::uint64_t seed = 1;
};

/// Extremal eigenvalues of T^{-1} A by Lanczos in the A inner product with full
/// reorthogonalization. One A product and one T^{-1} apply per step.
inline SpectrumReport lanczos_extremes(const LinearMap& A, const LinearMap& Tinv, Index n,
                                       const LanczosOptions& opt = {}) {
  require(n >= 1, "lanczos: empty operator");
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);

  const Index kmax = std::min(opt.max_steps, n);
  Matrix V(n, kmax), AV(n, kmax);
  Vector Av = A(v);
  double nrm = std::sqrt(v.dot(Av));
  V.col(0) = v / nrm;
  AV.col(0) = Av / nrm;
  std::vector<double> alpha, beta;

  SpectrumReport rep;
  rep.method = "lanczos";
  rep.N = n;
  for (Index j = 0; j < kmax; ++j) {
    Vector w = Tinv(AV.col(j));
    // Two passes of classical Gram-Schmidt in the A inner product.
    Vector c = AV.leftCols(j + 1).transpose() * w;
    w.noalias() -= V.leftCols(j + 1) * c;
    const Vector c2 = AV.leftCols(j + 1).transpose() * w;
    w.noalias() -= V.leftCols(j + 1) * c2;
    alpha.push_back(c[j] + c2[j]);
    const Vector Aw = A(w);
    const double b = std::sqrt(std::max(0.0, w.dot(Aw)));

    const Index k = j + 1;
    const bool last = k == kmax || b == 0.0;
    if (last || k % 10 == 0) {
      Matrix Tk = Matrix::Zero(k, k);
      for (Index i = 0; i < k; ++i) {
        Tk(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < k) Tk(i, i + 1) = Tk(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      const SymEigs e = sym_eigs(Tk, true);
      rep.lambda_min = e.values[0];
      rep.lambda_max = e.values[k - 1];
      rep.iterations = k;
      const double res_min = b * std::abs(e.vectors(k - 1, 0));
      const double res_max = b * std::abs(e.vectors(k - 1, k - 1));
      if (last || (res_min <= opt.tol * std::abs(rep.lambda_min) && res_max <= opt.tol * std::abs(rep.lambda_max)))
        break;
    }
    beta.push_back(b);
    V.col(k) = w / b;
    AV.col(k) = Aw / b;
  }
  return rep;
}

/// Lanczos extremes of T^{-1} A using the FFT matvec.
inline SpectrumReport lanczos_spectrum(const ToeplitzMatvec& A, const Preconditioner& precond,
                                       const LanczosOptions& opt = {}) {
  SpectrumReport rep = lanczos_extremes([&](const Vector& x) { return A.apply(x); },
                                        [&](const Vector& x) { return precond.apply(x); }, A.size(), opt);
  rep.D = precond.kind() == PrecondKind::None ? 1 : precond.num_subdomains();
  return rep;
}

}  // namespace iedd
