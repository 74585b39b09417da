#pragma once

// Dense kernels: Cholesky, triangular solves, interpolative decomposition,
// symmetric eigendecomposition.

#include "iedd/common.hpp"

#include <lapacke.h>

#include <algorithm>
#include <numeric>

namespace iedd {

/// A = G^T G with G upper triangular; the lower factor L = G^T is stored.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  explicit CholeskyFactor(const Matrix& A) : L_(A) {
    require(A.rows() == A.cols(), "cholesky: matrix must be square");
    const Index n = A.rows();
    if (n == 0) return;
    const lapack_int info =
        LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n), L_.data(), static_cast<lapack_int>(n));
    if (info > 0)
      throw NotPositiveDefinite("cholesky: non-positive pivot at position " + std::to_string(info - 1), info - 1);
    if (info < 0) throw NumericalError("cholesky: invalid argument to dpotrf");
    L_.triangularView<Eigen::StrictlyUpper>().setZero();
  }

  Index size() const { return L_.rows(); }
  const Matrix& lower() const { return L_; }
  Matrix upper() const { return L_.transpose(); }

  /// L^{-1} b
  template <class Derived>
  Matrix solve_lower(const Eigen::MatrixBase<Derived>& b) const {
    check(b.rows());
    return L_.triangularView<Eigen::Lower>().solve(b);
  }
  /// L^{-T} b
  template <class Derived>
  Matrix solve_upper(const Eigen::MatrixBase<Derived>& b) const {
    check(b.rows());
    return L_.transpose().triangularView<Eigen::Upper>().solve(b);
  }
  /// A^{-1} b
  template <class Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& b) const {
    return solve_upper(solve_lower(b));
  }
  /// L b
  template <class Derived>
  Matrix multiply_lower(const Eigen::MatrixBase<Derived>& b) const {
    check(b.rows());
    return L_.triangularView<Eigen::Lower>() * b;
  }
  /// L^T b
  template <class Derived>
  Matrix multiply_upper(const Eigen::MatrixBase<Derived>& b) const {
    check(b.rows());
    return L_.transpose().triangularView<Eigen::Upper>() * b;
  }

  Vector solve(const Vector& b) const { return solve(b.matrix()).col(0); }
  std::size_t memory_bytes() const { return static_cast<std::size_t>(L_.size()) * sizeof(double); }

 private:
  void check(Index rows) const {
    require(rows == L_.rows(), "triangular solve: rhs has " + std::to_string(rows) + " rows, factor has " +
                                   std::to_string(L_.rows()));
  }
  Matrix L_;
};

inline CholeskyFactor cholesky(const Matrix& A) { return CholeskyFactor(A); }

enum class TriangularSide { Forward, Backward };

/// Forward: solves G^T x = b (lower factor). Backward: solves G x = b.
inline Vector solve_triangular(const CholeskyFactor& f, const Vector& rhs, TriangularSide side) {
  return side == TriangularSide::Forward ? Vector(f.solve_lower(rhs).col(0)) : Vector(f.solve_upper(rhs).col(0));
}

struct IdResult {
  IndexSet skeleton;   // column positions, in pivot order
  IndexSet redundant;  // remaining column positions, in pivot order
  Matrix interp;       // |s| x |r|, B(:, r) ~ B(:, s) * interp
  double achieved = 0.0;  // ||B(:,r) - B(:,s) T||_F / ||B(:,r)||_F
  Index rank() const { return static_cast<Index>(skeleton.size()); }
};

/// Column-pivoted Householder QR truncated at the first |R_kk| <= eps |R_11|.
/// Column norms are recomputed exactly at every step; ties go to the lowest
/// original column index.
inline IdResult interpolative_decomposition(const Matrix& B, double eps) {
  require(eps > 0.0 && eps < 1.0, "interpolative decomposition: eps must lie in (0, 1)");
  require(B.cols() >= 1, "interpolative decomposition: matrix has no columns");
  const Index m = B.rows(), n = B.cols();
  Matrix W = B;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});

  const Index steps = std::min(m, n);
  Index k = 0;
  double r11 = 0.0;
  for (; k < steps; ++k) {
    Index best = k;
    double best_norm = -1.0;
    for (Index j = k; j < n; ++j) {
      const double nrm = W.col(j).tail(m - k).squaredNorm();
      if (nrm > best_norm || (nrm == best_norm && perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(best)])) {
        best = j;
        best_norm = nrm;
      }
    }
    const double rkk = std::sqrt(best_norm);
    if (k == 0) r11 = rkk;
    if (rkk == 0.0 || rkk <= eps * r11) break;
    if (best != k) {
      W.col(k).swap(W.col(best));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(best)]);
    }
    // Householder reflector mapping W(k:m, k) to (-sign * rkk) e_1
    auto x = W.col(k).tail(m - k);
    const double alpha = x[0] >= 0.0 ? -rkk : rkk;
    Vector v = x;
    v[0] -= alpha;
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 > 0.0) {
      const double beta = 2.0 / vnorm2;
      auto rest = W.block(k, k + 1, m - k, n - k - 1);
      const Eigen::RowVectorXd w = v.transpose() * rest;
      rest.noalias() -= beta * v * w;
    }
    x.setZero();
    x[0] = alpha;
  }

  IdResult id;
  id.skeleton.assign(perm.begin(), perm.begin() + k);
  id.redundant.assign(perm.begin() + k, perm.end());
  if (k > 0 && k < n) {
    id.interp = W.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(W.block(0, k, k, n - k));
  } else {
    id.interp = Matrix::Zero(k, n - k);
  }
  if (k < n) {
    const double r22 = k < m ? W.bottomRightCorner(m - k, n - k).norm() : 0.0;
    double br = 0.0;
    for (Index j : id.redundant) br += B.col(j).squaredNorm();
    id.achieved = br > 0.0 ? r22 / std::sqrt(br) : 0.0;
  }
  return id;
}

struct SymEigs {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]; empty when not requested
};

inline SymEigs sym_eigs(const Matrix& A, bool want_vectors = true) {
  require(A.rows() == A.cols(), "sym_eigs: matrix must be square");
  const Index n = A.rows();
  SymEigs out;
  out.values.resize(n);
  if (n == 0) return out;
  Matrix work = A;
  const lapack_int ln = static_cast<lapack_int>(n);
  // Values only: two-stage tridiagonal reduction.
  const lapack_int info =
      want_vectors ? LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', ln, work.data(), ln, out.values.data())
                   : LAPACKE_dsyevd_2stage(LAPACK_COL_MAJOR, 'N', 'L', ln, work.data(), ln, out.values.data());
  if (info > 0) throw NumericalError("sym_eigs: dsyevd failed to converge");
  if (info < 0) throw NumericalError("sym_eigs: invalid argument to dsyevd");
  if (want_vectors) out.vectors = std::move(work);
  return out;
}

}  // namespace iedd
