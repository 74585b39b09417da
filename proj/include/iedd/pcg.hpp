#pragma once

#include "iedd/common.hpp"

#include <functional>
#include <algorithm>

namespace iedd {

using LinearMap = std::function<Vector(const Vector&)>;

struct PcgOptions {
  double tol = 1e-12;
  Index max_iters = 1000;
  Index stagnation_window = 30;
  double stagnation_factor = 1e-3;
};

struct PcgReport {
  Index n_it = 0;
  double achieved_residual = 0.0;  // recursive relative residual at exit
  double true_residual = 0.0;      // ||f - A u|| / ||f|| recomputed at exit
  double t_pcg = 0.0;              // seconds
  double t_s = 0.0;                // mean seconds per preconditioner apply
  std::vector<double> residual_history;  // entry 0 is the initial residual
  bool converged = false;
  bool stagnated = false;
};

struct PcgResult {
  Vector u;
  PcgReport report;
};

/// Preconditioned CG from u0 = 0. Stops on ||r_k|| / ||f|| <= tol (recursive
/// residual), on stagnation (the best residual of the last `window`
/// iterations is not a factor (1 - stagnation_factor) below the best before
/// the window), or after max_iters.
inline PcgResult pcg(const LinearMap& A, const LinearMap& Tinv, const Vector& f, const PcgOptions& opt = {},
                     const std::function<void(Index, double)>& observer = {}) {
  require(opt.tol > 0.0 && opt.tol < 1.0, "pcg: tol must lie in (0, 1)");
  require(opt.max_iters >= 0, "pcg: max_iters must be non-negative");
  const Stopwatch clock;
  PcgResult out;
  PcgReport& rep = out.report;
  out.u = Vector::Zero(f.size());
  const double fnorm = f.norm();
  if (!std::isfinite(fnorm)) throw NumericalError("pcg: right-hand side is not finite");
  rep.residual_history.push_back(fnorm > 0.0 ? 1.0 : 0.0);
  if (fnorm == 0.0) {
    rep.converged = true;
    rep.t_pcg = clock.seconds();
    return out;
  }

  double t_apply = 0.0;
  Index applies = 0;
  const auto precondition = [&](const Vector& r) {
    const Stopwatch t;
    Vector z = Tinv(r);
    t_apply += t.seconds();
    ++applies;
    return z;
  };

  Vector r = f;
  Vector z = precondition(r);
  Vector p = z;
  double rz = r.dot(z);
  double best_before = rep.residual_history.front();
  for (Index k = 1; k <= opt.max_iters; ++k) {
    const Vector Ap = A(p);
    const double pAp = p.dot(Ap);
    if (!std::isfinite(pAp)) throw NumericalError("pcg: non-finite curvature at iteration " + std::to_string(k));
    if (pAp <= 0.0) throw NumericalError("pcg: operator is not positive definite (p^T A p <= 0)");
    const double alpha = rz / pAp;
    out.u.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    const double res = r.norm() / fnorm;
    if (!std::isfinite(res)) throw NumericalError("pcg: residual became non-finite at iteration " + std::to_string(k));
    rep.residual_history.push_back(res);
    rep.n_it = k;
    if (observer) observer(k, res);
    if (res <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (opt.stagnation_window > 0 && k > opt.stagnation_window) {
      const auto& h = rep.residual_history;
      const auto w0 = h.end() - opt.stagnation_window;
      best_before = std::min(best_before, *(w0 - 1));
      const double best_window = *std::min_element(w0, h.end());
      if (best_window > (1.0 - opt.stagnation_factor) * best_before) {
        rep.stagnated = true;
        break;
      }
    }
    z = precondition(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.achieved_residual = rep.residual_history.back();
  rep.true_residual = (f - A(out.u)).norm() / fnorm;
  rep.t_pcg = clock.seconds();
  rep.t_s = applies > 0 ? t_apply / static_cast<double>(applies) : 0.0;
  return out;
}

}  // namespace iedd
