#pragma once

// T^{-1} = sum_i R_i^T A_i^{-1} R_i over a decomposition, with dense Cholesky
// or recursive-skeletonization subdomain solvers.

#include "iedd/geometry.hpp"
#include "iedd/rskel.hpp"

#include <optional>

namespace iedd {

enum class PrecondKind { None, Jacobi, Schwarz, Cbd, RsGlobal };
enum class Backend { Exact, Rskel };

inline std::string_view to_string(PrecondKind k) {
  switch (k) {
    case PrecondKind::None: return "none";
    case PrecondKind::Jacobi: return "jacobi";
    case PrecondKind::Schwarz: return "schwarz";
    case PrecondKind::Cbd: return "cbd";
    case PrecondKind::RsGlobal: return "rs-global";
  }
  return "?";
}
inline std::string_view to_string(Backend b) { return b == Backend::Exact ? "exact" : "rskel"; }

inline PrecondKind parse_precond_kind(std::string_view s) {
  if (s == "none") return PrecondKind::None;
  if (s == "jacobi") return PrecondKind::Jacobi;
  if (s == "schwarz") return PrecondKind::Schwarz;
  if (s == "cbd") return PrecondKind::Cbd;
  if (s == "rs-global") return PrecondKind::RsGlobal;
  throw ConfigError("unknown preconditioner '" + std::string(s) + "'");
}
inline Backend parse_backend(std::string_view s) {
  if (s == "exact") return Backend::Exact;
  if (s == "rskel") return Backend::Rskel;
  throw ConfigError("unknown backend '" + std::string(s) + "'");
}

struct PrecondOptions {
  PrecondKind kind = PrecondKind::Cbd;
  Backend backend = Backend::Exact;
  Index m = 2;              // partitions per axis
  Index overlap_width = 1;
  double eps = 1e-3;
  ProxyConfig proxy;
  Index dense_limit = 4096;  // largest subdomain factorized densely
};

struct PrecondStats {
  Index D = 0;                    // number of subdomains
  Index S = 0;                    // largest root skeleton over subdomains (rskel)
  Index max_subdomain = 0;        // largest |I_i|
  std::size_t memory_bytes = 0;
  double t_factor = 0.0;
};

/// Solver for one subdomain matrix A_i = A(I_i, I_i).
class SubdomainSolver {
 public:
  static SubdomainSolver exact(const KernelOperator& op, IndexSet dofs) {
    SubdomainSolver s;
    s.dofs_ = std::move(dofs);
    s.chol_ = CholeskyFactor(op.block(s.dofs_, s.dofs_));
    return s;
  }
  static SubdomainSolver skel(const KernelOperator& op, const BoxTree& tree, double eps, const ProxyConfig& proxy) {
    SubdomainSolver s;
    s.dofs_ = tree.dofs;
    s.skel_ = factorize(op, tree, eps, proxy);
    return s;
  }

  const IndexSet& dofs() const { return dofs_; }
  Index size() const { return static_cast<Index>(dofs_.size()); }
  const std::optional<SkelFactor>& skel() const { return skel_; }

  Matrix solve(const Matrix& f) const { return skel_ ? skel_->apply_inverse(f) : chol_.solve(f); }

  std::size_t memory_bytes() const {
    if (skel_) return skel_->stats().memory_bytes;
    const auto n = static_cast<std::size_t>(size());
    return 8 * (n * (n + 1) / 2 + n);
  }
  Index root_size() const { return skel_ ? skel_->stats().S : size(); }

 private:
  IndexSet dofs_;
  CholeskyFactor chol_;
  std::optional<SkelFactor> skel_;
};

class Preconditioner {
 public:
  /// Identity preconditioner on N unknowns.
  static Preconditioner identity(Index n) {
    Preconditioner p;
    p.kind_ = PrecondKind::None;
    p.n_ = n;
    return p;
  }

  static Preconditioner build(const KernelOperator& op, const PrecondOptions& opt) {
    if (opt.kind == PrecondKind::None) return identity(op.size());
    const Stopwatch clock;
    Preconditioner p;
    p.kind_ = opt.kind;
    p.backend_ = opt.kind == PrecondKind::RsGlobal ? Backend::Rskel : opt.backend;
    p.n_ = op.size();
    p.opt_ = opt;
    if (opt.kind == PrecondKind::RsGlobal) {
      const Partitioning parts(op.grid(), opt.m);
      p.solvers_.push_back(SubdomainSolver::skel(op, global_tree(parts), opt.eps, opt.proxy));
      p.finish_stats(clock);
      return p;
    }
    const DecompositionKind dk = opt.kind == PrecondKind::Jacobi    ? DecompositionKind::Jacobi
                                 : opt.kind == PrecondKind::Schwarz ? DecompositionKind::Schwarz
                                                                    : DecompositionKind::Cbd;
    const Decomposition d = build_decomposition(op.grid(), opt.m, opt.overlap_width, dk);
    if (p.backend_ == Backend::Rskel && dk == DecompositionKind::Cbd) {
      const Partitioning parts(op.grid(), opt.m);
      for (Index c = 0; c < d.size(); ++c) {
        const BoxTree tree = colored_tree(parts, opt.overlap_width, static_cast<int>(c));
        p.solvers_.push_back(build_solver(op, c, [&] {
          return SubdomainSolver::skel(op, tree, opt.eps, opt.proxy);
        }));
      }
    } else {
      p.add_subdomains(op, d);
    }
    p.finish_stats(clock);
    return p;
  }

  /// Preconditioner over explicit subdomains (e.g. the two halves of a grid).
  static Preconditioner from_decomposition(const KernelOperator& op, const Decomposition& d,
                                           const PrecondOptions& opt = {}) {
    const Stopwatch clock;
    Preconditioner p;
    p.kind_ = d.kind == DecompositionKind::Jacobi    ? PrecondKind::Jacobi
              : d.kind == DecompositionKind::Schwarz ? PrecondKind::Schwarz
                                                     : PrecondKind::Cbd;
    p.backend_ = opt.backend;
    p.n_ = op.size();
    p.opt_ = opt;
    p.add_subdomains(op, d);
    p.finish_stats(clock);
    return p;
  }

  PrecondKind kind() const { return kind_; }
  Backend backend() const { return backend_; }
  Index size() const { return n_; }
  Index num_subdomains() const { return static_cast<Index>(solvers_.size()); }
  const SubdomainSolver& subdomain(Index i) const { return solvers_[static_cast<std::size_t>(i)]; }
  const PrecondStats& stats() const { return stats_; }

  /// T^{-1} f, accumulated in ascending subdomain order.
  Vector apply(const Vector& f) const {
    require(f.size() == n_, "preconditioner: vector length " + std::to_string(f.size()) + " does not match N = " +
                                std::to_string(n_));
    if (kind_ == PrecondKind::None) return f;
    Vector out = Vector::Zero(n_);
    for (const SubdomainSolver& s : solvers_) {
      Matrix fi(s.size(), 1);
      for (Index k = 0; k < s.size(); ++k) fi(k, 0) = f[s.dofs()[static_cast<std::size_t>(k)]];
      const Matrix ui = s.solve(fi);
      for (Index k = 0; k < s.size(); ++k) out[s.dofs()[static_cast<std::size_t>(k)]] += ui(k, 0);
    }
    return out;
  }

  /// R_i^T A_i^{-1} R_i v for a single subdomain.
  Vector apply_subdomain(Index i, const Vector& v) const {
    const SubdomainSolver& s = solvers_[static_cast<std::size_t>(i)];
    Matrix fi(s.size(), 1);
    for (Index k = 0; k < s.size(); ++k) fi(k, 0) = v[s.dofs()[static_cast<std::size_t>(k)]];
    const Matrix ui = s.solve(fi);
    Vector out = Vector::Zero(n_);
    for (Index k = 0; k < s.size(); ++k) out[s.dofs()[static_cast<std::size_t>(k)]] = ui(k, 0);
    return out;
  }

  /// Dense T^{-1}, assembled from the dense inverse of every subdomain solver.
  Matrix dense() const {
    if (kind_ == PrecondKind::None) return Matrix::Identity(n_, n_);
    Matrix T = Matrix::Zero(n_, n_);
    for (const SubdomainSolver& s : solvers_) {
      const Matrix inv = s.solve(Matrix::Identity(s.size(), s.size()));
      const IndexSet& I = s.dofs();
      for (Index b = 0; b < s.size(); ++b)
        for (Index a = 0; a < s.size(); ++a)
          T(I[static_cast<std::size_t>(a)], I[static_cast<std::size_t>(b)]) += inv(a, b);
    }
    return T;
  }

 private:
  template <class Make>
  static SubdomainSolver build_solver(const KernelOperator&, Index id, Make&& make) {
    try {
      return make();
    } catch (const SkelNotPositiveDefinite& e) {
      throw SkelNotPositiveDefinite(e.box(), e.pivot(), "subdomain " + std::to_string(id) + ": ");
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("subdomain " + std::to_string(id) + ": " + e.what(), e.pivot());
    }
  }

  void add_subdomains(const KernelOperator& op, const Decomposition& d) {
    for (Index i = 0; i < d.size(); ++i) {
      const IndexSet& I = d.subdomains[static_cast<std::size_t>(i)];
      if (backend_ == Backend::Exact) {
        require(static_cast<Index>(I.size()) <= opt_.dense_limit,
                "subdomain " + std::to_string(i) + " has " + std::to_string(I.size()) +
                    " points, above the dense limit " + std::to_string(opt_.dense_limit) + "; use --backend rskel");
        solvers_.push_back(build_solver(op, i, [&] { return SubdomainSolver::exact(op, I); }));
      } else {
        solvers_.push_back(build_solver(op, i, [&] {
          return SubdomainSolver::skel(op, single_tree(op.grid(), I), opt_.eps, opt_.proxy);
        }));
      }
    }
  }

  void finish_stats(const Stopwatch& clock) {
    stats_.D = num_subdomains();
    for (const SubdomainSolver& s : solvers_) {
      stats_.S = std::max(stats_.S, s.root_size());
      stats_.max_subdomain = std::max(stats_.max_subdomain, s.size());
      stats_.memory_bytes += s.memory_bytes();
    }
    stats_.t_factor = clock.seconds();
  }

  PrecondKind kind_ = PrecondKind::None;
  Backend backend_ = Backend::Exact;
  Index n_ = 0;
  PrecondOptions opt_;
  std::vector<SubdomainSolver> solvers_;
  PrecondStats stats_;
};

}  // namespace iedd
