#pragma once

// Golden suites: stored reference values (data/goldens.json) and the exact
// structural properties, each checked with a tolerance fixed here.

#include "iedd/experiment.hpp"

#include <functional>
#include <map>

#ifndef IEDD_DATA_DIR
#define IEDD_DATA_DIR "data"
#endif

namespace iedd::golden {

namespace tolerance {
inline constexpr double spectrum = 2e-3;
inline constexpr double spectrum_2d_seconds = 120.0;
inline constexpr double exact_structure = 1e-8;
inline constexpr double pairing = 1e-8;
inline constexpr Index iterations = 2;
inline constexpr double interface = 2e-3;
inline constexpr double matvec = 1e-12;
inline constexpr double rskel_factor = 100.0;
inline constexpr double global_skeleton_spread = 0.10;
inline constexpr double colored_ratio_lo = 1.6;
inline constexpr double colored_ratio_hi = 2.6;
inline constexpr double ordering_gap = 0.05;
inline constexpr Index benchmark_iterations = 3;
inline constexpr double benchmark_seconds = 600.0;
inline constexpr double growth = 4.5;
}  // namespace tolerance

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  Index failures() const {
    return std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; });
  }
};

inline std::string default_golden_path() { return std::string(IEDD_DATA_DIR) + "/goldens.json"; }

inline json load_goldens(const std::string& path = default_golden_path()) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open golden file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("golden file '" + path + "': " + e.what());
  }
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string grid_label(int dim, Index n) { return "N=" + std::to_string(n) + "^" + std::to_string(dim); }

inline void expect_close(SuiteResult& r, const std::string& name, double got, double want, double tol) {
  const double diff = std::abs(got - want);
  r.checks.push_back({name, diff <= tol,
                      "got " + fmt("%.6f", got) + ", expected " + fmt("%.4f", want) + " (|diff| " + fmt("%.2e", diff) +
                          ", tol " + fmt("%.0e", tol) + ")"});
}

inline void expect_count(SuiteResult& r, const std::string& name, Index got, Index want, Index tol) {
  const Index diff = got > want ? got - want : want - got;
  r.checks.push_back({name, diff <= tol,
                      "got " + std::to_string(got) + ", expected " + std::to_string(want) + " +- " +
                          std::to_string(tol)});
}

inline void expect_true(SuiteResult& r, const std::string& name, bool ok, const std::string& detail) {
  r.checks.push_back({name, ok, detail});
}

struct SpectrumCase {
  int dim;
  Index n;
  NodeLayout layout;
  PrecondKind kind;
  Index m;
  Index overlap = 1;
};

inline SpectrumReport spectrum_of(const SpectrumCase& c) {
  const KernelOperator op(Grid(c.dim, c.n), c.layout);
  PrecondOptions o;
  o.kind = c.kind;
  o.m = c.m;
  o.overlap_width = c.overlap;
  const Preconditioner P = Preconditioner::build(op, o);
  return preconditioned_spectrum(op, P, std::max<Index>(4096, op.size()));
}

inline std::string case_label(const SpectrumCase& c) {
  return grid_label(c.dim, c.n) + " " + std::string(to_string(c.kind)) + " m=" + std::to_string(c.m) +
         (c.overlap != 1 ? " w=" + std::to_string(c.overlap) : "");
}

inline NodeLayout layout_of(const json& e) { return parse_node_layout(e.at("layout").get<std::string>()); }

/// Golden rows of `table` tagged with this suite name.
inline std::vector<json> rows_for(const json& goldens, const std::string& table, const std::string& suite) {
  std::vector<json> out;
  for (const json& e : goldens.at(table))
    if (!e.contains("suite") || e.at("suite") == suite) out.push_back(e);
  require(!out.empty(), "golden file has no '" + table + "' rows for suite " + suite);
  return out;
}

}  // namespace detail

/// Eigenvalue extremes against the stored reference values.
inline void spectrum_table(SuiteResult& r, const json& goldens, const std::string& suite) {
  for (const json& e : detail::rows_for(goldens, "spectrum", suite)) {
    const detail::SpectrumCase c{e.at("dim").get<int>(), e.at("n").get<Index>(), detail::layout_of(e),
                                 parse_precond_kind(e.at("kind").get<std::string>()), e.at("m").get<Index>()};
    const SpectrumReport rep = detail::spectrum_of(c);
    detail::expect_close(r, detail::case_label(c) + " lambda_max", rep.lambda_max, e.at("lambda_max"),
                         tolerance::spectrum);
    detail::expect_close(r, detail::case_label(c) + " lambda_min", rep.lambda_min, e.at("lambda_min"),
                         tolerance::spectrum);
  }
}

inline void suite_spectrum_2d(SuiteResult& r, const json& g) {
  const Stopwatch clock;
  spectrum_table(r, g, "spectrum-2d");
  const double t = clock.seconds();
  detail::expect_true(r, "2D spectrum rows runtime", t < tolerance::spectrum_2d_seconds,
                      detail::fmt("%.1f s", t) + " (limit " + detail::fmt("%.0f s", tolerance::spectrum_2d_seconds) + ")");
}

inline void suite_spectrum_3d(SuiteResult& r, const json& g) { spectrum_table(r, g, "spectrum-3d"); }

inline void suite_many_subdomains(SuiteResult& r, const json& g) { spectrum_table(r, g, "many-subdomains"); }

/// lambda_max = 2^d with an eigenspace of dimension (2(m-1))^d for uniform
/// overlapping decompositions with 2^d subdomains; lambda_max <= D always.
inline void suite_structure(SuiteResult& r, const json&) {
  using K = PrecondKind;
  const NodeLayout E = NodeLayout::Endpoint, Mid = NodeLayout::Midpoint;
  const std::vector<detail::SpectrumCase> sharp{
      {2, 8, E, K::Schwarz, 2},  {2, 16, E, K::Schwarz, 2}, {2, 32, E, K::Schwarz, 2}, {2, 8, E, K::Cbd, 2},
      {2, 16, E, K::Cbd, 4},     {2, 32, E, K::Cbd, 8},     {2, 16, Mid, K::Cbd, 4},   {3, 4, Mid, K::Schwarz, 2},
      {3, 8, Mid, K::Schwarz, 2}, {3, 8, Mid, K::Cbd, 4}};
  for (const detail::SpectrumCase& c : sharp) {
    const SpectrumReport rep = detail::spectrum_of(c);
    const double top = static_cast<double>(ipow(2, c.dim));
    const Index mult = multiplicity_at(rep, top, tolerance::exact_structure);
    const Index want = ipow(2 * (c.m - 1), c.dim);
    detail::expect_close(r, detail::case_label(c) + " lambda_max = 2^d", rep.lambda_max, top,
                         tolerance::exact_structure);
    detail::expect_count(r, detail::case_label(c) + " multiplicity (2(m-1))^d", mult, want, 0);
    detail::expect_true(r, detail::case_label(c) + " lambda_max <= D", rep.lambda_max <= rep.D + 1e-8,
                        detail::fmt("%.6f", rep.lambda_max) + " vs D = " + std::to_string(rep.D));
  }
  const std::vector<detail::SpectrumCase> bounded{{2, 16, E, K::Jacobi, 2},  {2, 16, E, K::Jacobi, 4},
                                                  {2, 16, E, K::Schwarz, 4}, {2, 32, E, K::Schwarz, 8},
                                                  {2, 16, E, K::Schwarz, 4, 2}, {3, 8, Mid, K::Jacobi, 2},
                                                  {3, 8, Mid, K::Schwarz, 4}};
  for (const detail::SpectrumCase& c : bounded) {
    const SpectrumReport rep = detail::spectrum_of(c);
    detail::expect_true(r, detail::case_label(c) + " lambda_max <= D", rep.lambda_max <= rep.D + 1e-8,
                        detail::fmt("%.6f", rep.lambda_max) + " vs D = " + std::to_string(rep.D));
    detail::expect_true(r, detail::case_label(c) + " lambda_min > 0", rep.lambda_min > 0.0,
                        detail::fmt("%.6f", rep.lambda_min));
  }
}

/// Block Jacobi on two halves: the spectrum is symmetric about 1.
inline void suite_pairing(SuiteResult& r, const json&) {
  const std::vector<std::pair<int, Index>> cases{{1, 32}, {2, 8}, {2, 16}};
  for (const auto& [dim, n] : cases) {
    for (NodeLayout layout : {NodeLayout::Endpoint, NodeLayout::Midpoint}) {
      const Grid grid(dim, n);
      const KernelOperator op(grid, layout);
      const Decomposition halves = half_split(grid);
      const Preconditioner P = Preconditioner::from_decomposition(op, halves);
      const SpectrumReport rep = preconditioned_spectrum(op, P, std::max<Index>(4096, op.size()));
      const std::string label = detail::grid_label(dim, n) + " " + std::string(to_string(layout));
      const double defect = pairing_defect(rep.eigenvalues);
      detail::expect_true(r, label + " pairing defect", defect <= tolerance::pairing,
                          detail::fmt("%.2e", defect) + " (tol " + detail::fmt("%.0e", tolerance::pairing) + ")");
      detail::expect_close(r, label + " lambda_max + lambda_min", rep.lambda_max + rep.lambda_min, 2.0,
                           tolerance::pairing);
    }
  }
}

/// PCG iteration counts; f ~ N(0,1) with seed 1.
inline void iteration_table(SuiteResult& r, const json& goldens, const std::string& suite) {
  for (const json& e : detail::rows_for(goldens, "iterations", suite)) {
    ExperimentConfig cfg;
    cfg.command = "solve";
    cfg.dim = e.at("dim").get<int>();
    cfg.layout = detail::layout_of(e);
    cfg.rhs = "noise";
    cfg.seed = 1;
    const Index n = e.at("n").get<Index>();
    const std::vector<std::pair<PrecondKind, Index>> kinds{
        {PrecondKind::Jacobi, 2},
        {PrecondKind::Schwarz, 2},
        {PrecondKind::Cbd, ExperimentConfig::parse_m(e.at("m_cbd").get<std::string>(), n)}};
    for (const auto& [kind, m] : kinds) {
      const SolveRow row = run_solve_row(cfg, {n, m, kind, 1});
      const std::string name = std::string(to_string(kind));
      detail::expect_count(r, detail::grid_label(cfg.dim, n) + " " + name + " m=" + std::to_string(m) + " n_it",
                           row.report.n_it, e.at(name).get<Index>(), tolerance::iterations);
    }
  }
}

inline void suite_iterations_2d(SuiteResult& r, const json& g) { iteration_table(r, g, "iterations-2d"); }
inline void suite_iterations_3d(SuiteResult& r, const json& g) { iteration_table(r, g, "iterations-3d"); }

/// Smallest eigenvalue against the overlap width (Lanczos; 32^3 exceeds the dense route).
inline void suite_interface(SuiteResult& r, const json& goldens) {
  std::map<int, std::vector<double>> by_dim;
  for (const json& e : goldens.at("interface")) {
    const int dim = e.at("dim").get<int>();
    const KernelOperator op(Grid(dim, e.at("n").get<Index>()), detail::layout_of(e));
    PrecondOptions o;
    o.kind = PrecondKind::Schwarz;
    o.m = e.at("m").get<Index>();
    o.overlap_width = e.at("overlap").get<Index>();
    const Preconditioner P = Preconditioner::build(op, o);
    const ToeplitzMatvec A(op);
    const SpectrumReport rep = lanczos_spectrum(A, P);
    by_dim[dim].push_back(rep.lambda_min);
    detail::expect_close(r,
                         detail::grid_label(dim, op.grid().n()) + " schwarz m=" + std::to_string(o.m) +
                             " w=" + std::to_string(o.overlap_width) + " lambda_min",
                         rep.lambda_min, e.at("lambda_min"), tolerance::interface);
  }
  for (const auto& [dim, mins] : by_dim) {
    const bool increasing = std::is_sorted(mins.begin(), mins.end()) &&
                            std::adjacent_find(mins.begin(), mins.end()) == mins.end();
    detail::expect_true(r, std::to_string(dim) + "D lambda_min increases with overlap width", increasing, "");
  }
}

/// FFT product against the dense product.
inline void suite_matvec(SuiteResult& r, const json&) {
  const std::vector<std::pair<int, Index>> cases{{2, 2}, {2, 8}, {2, 16}, {2, 32}, {2, 64}, {3, 2}, {3, 4}, {3, 8}, {3, 16}};
  std::uint64_t seed = 11;
  for (const auto& [dim, n] : cases) {
    for (NodeLayout layout : {NodeLayout::Midpoint, NodeLayout::Endpoint}) {
      const KernelOperator op(Grid(dim, n), layout);
      const ToeplitzMatvec fast(op);
      Matrix V(op.size(), 20);
      for (Index j = 0; j < V.cols(); ++j) V.col(j) = standard_normal(op.size(), seed++);
      const Matrix dense = op.dense() * V;
      const Matrix fft = fast.apply(V);
      double worst = 0.0;
      for (Index j = 0; j < V.cols(); ++j)
        worst = std::max(worst, (fft.col(j) - dense.col(j)).norm() / dense.col(j).norm());
      detail::expect_true(r, detail::grid_label(dim, n) + " " + std::string(to_string(layout)) + " FFT vs dense",
                          worst <= tolerance::matvec,
                          "max rel err " + detail::fmt("%.2e", worst) + " over 20 vectors");
    }
  }
}

/// ||F^{-1}(A v) - v|| / ||v|| for the global factorization.
inline double rskel_inverse_error(const KernelOperator& op, Index m, double eps, std::uint64_t seed) {
  const SkelFactor F = factorize(op, global_tree(Partitioning(op.grid(), m)), eps);
  Matrix V(op.size(), 10);
  for (Index j = 0; j < V.cols(); ++j) V.col(j) = standard_normal(op.size(), seed + static_cast<std::uint64_t>(j));
  const Matrix W = F.apply_inverse(Matrix(op.dense() * V));
  double worst = 0.0;
  for (Index j = 0; j < V.cols(); ++j) worst = std::max(worst, (W.col(j) - V.col(j)).norm() / V.col(j).norm());
  return worst;
}

inline void suite_rskel_accuracy(SuiteResult& r, const json&) {
  for (Index n : {16, 32}) {
    const KernelOperator op(Grid(2, n), NodeLayout::Endpoint);
    std::vector<double> errs;
    for (double eps : {1e-3, 1e-6, 1e-9}) {
      const double err = rskel_inverse_error(op, n / 4, eps, 101);
      errs.push_back(err);
      detail::expect_true(r, detail::grid_label(2, n) + " global eps=" + detail::fmt("%.0e", eps) + " inverse error",
                          err <= tolerance::rskel_factor * eps,
                          detail::fmt("%.2e", err) + " (limit " + detail::fmt("%.0e", tolerance::rskel_factor * eps) +
                              ")");
    }
    detail::expect_true(r, detail::grid_label(2, n) + " error decreases with eps", errs[0] > errs[1] && errs[1] > errs[2],
                        detail::fmt("%.2e", errs[0]) + " > " + detail::fmt("%.2e", errs[1]) + " > " +
                            detail::fmt("%.2e", errs[2]));
  }
}

inline void suite_rskel_scaling(SuiteResult& r, const json&) {
  const KernelOperator op128(Grid(2, 128), NodeLayout::Endpoint);
  std::vector<Index> global;
  for (Index m : {8, 16, 32}) global.push_back(factorize(op128, global_tree(Partitioning(op128.grid(), m)), 1e-3).stats().S);
  const double mean = static_cast<double>(global[0] + global[1] + global[2]) / 3.0;
  double spread = 0.0;
  for (Index s : global) spread = std::max(spread, std::abs(static_cast<double>(s) - mean) / mean);
  detail::expect_true(r, "global S constant across M at N=128^2", spread <= tolerance::global_skeleton_spread,
                      "S = " + std::to_string(global[0]) + ", " + std::to_string(global[1]) + ", " +
                          std::to_string(global[2]) + " for M = 8^2, 16^2, 32^2 (max deviation " +
                          detail::fmt("%.1f%%", 100.0 * spread) + ")");

  const KernelOperator op256(Grid(2, 256), NodeLayout::Endpoint);
  std::vector<Index> colored;
  for (Index m : {8, 16, 32}) {
    PrecondOptions o;
    o.kind = PrecondKind::Cbd;
    o.backend = Backend::Rskel;
    o.m = m;
    colored.push_back(Preconditioner::build(op256, o).stats().S);
  }
  for (std::size_t i = 0; i + 1 < colored.size(); ++i) {
    const double ratio = static_cast<double>(colored[i + 1]) / static_cast<double>(colored[i]);
    const Index m0 = Index{8} << i;
    detail::expect_true(r,
                        "colored S growth M=" + std::to_string(m0) + "^2 -> " + std::to_string(2 * m0) + "^2 at N=256^2",
                        ratio >= tolerance::colored_ratio_lo && ratio <= tolerance::colored_ratio_hi,
                        "S " + std::to_string(colored[i]) + " -> " + std::to_string(colored[i + 1]) + " (ratio " +
                            detail::fmt("%.2f", ratio) + ")");
  }
}

/// lambda_min(CBD) >= lambda_min(Schwarz) >= lambda_min(Jacobi) with D = 2^d.
inline void suite_ordering(SuiteResult& r, const json&) {
  for (Index n : {16, 32}) {
    for (NodeLayout layout : {NodeLayout::Endpoint, NodeLayout::Midpoint}) {
      const double j = detail::spectrum_of({2, n, layout, PrecondKind::Jacobi, 2}).lambda_min;
      const double s = detail::spectrum_of({2, n, layout, PrecondKind::Schwarz, 2}).lambda_min;
      const double c = detail::spectrum_of({2, n, layout, PrecondKind::Cbd, n / 4}).lambda_min;
      const std::string label = detail::grid_label(2, n) + " " + std::string(to_string(layout));
      detail::expect_true(r, label + " cbd >= schwarz >= jacobi", c >= s && s >= j,
                          detail::fmt("%.4f", c) + " >= " + detail::fmt("%.4f", s) + " >= " + detail::fmt("%.4f", j));
      detail::expect_true(r, label + " cbd - jacobi >= 0.05", c - j >= tolerance::ordering_gap,
                          detail::fmt("%.4f", c - j));
    }
  }
}

/// Builds at two sizes, interleaved, keeping the fastest build of each.
inline std::pair<PrecondStats, PrecondStats> best_builds(const KernelOperator& a, const PrecondOptions& oa,
                                                        const KernelOperator& b, const PrecondOptions& ob,
                                                        int repeats) {
  std::pair<PrecondStats, PrecondStats> best;
  for (int i = 0; i < repeats; ++i) {
    const PrecondStats sa = Preconditioner::build(a, oa).stats();
    const PrecondStats sb = Preconditioner::build(b, ob).stats();
    if (i == 0 || sa.t_factor < best.first.t_factor) best.first = sa;
    if (i == 0 || sb.t_factor < best.second.t_factor) best.second = sb;
  }
  return best;
}

/// CBD with the skeletonization backend at desk scale.
inline void suite_benchmark(SuiteResult& r, const json& goldens) {
  const json& b = goldens.at("benchmark");
  ExperimentConfig cfg;
  cfg.command = "solve";
  cfg.dim = b.at("dim").get<int>();
  cfg.layout = detail::layout_of(b);
  cfg.backend = Backend::Rskel;
  cfg.eps = b.at("eps").get<double>();
  cfg.rhs = "noise";
  const Index n = b.at("n").get<Index>(), m = b.at("m").get<Index>();
  const Stopwatch clock;
  const SolveRow row = run_solve_row(cfg, {n, m, PrecondKind::Cbd, 1});
  const double total = clock.seconds();
  const std::string label = detail::grid_label(cfg.dim, n) + " M=" + std::to_string(m) + "^2 cbd rskel";
  detail::expect_true(r, label + " converged", row.report.converged,
                      "residual " + detail::fmt("%.2e", row.report.achieved_residual) + ", S = " +
                          std::to_string(row.S) + " (golden " + std::to_string(b.at("S").get<Index>()) + ")");
  detail::expect_count(r, label + " n_it", row.report.n_it, b.at("n_it").get<Index>(), tolerance::benchmark_iterations);
  detail::expect_true(r, label + " wall clock", total < tolerance::benchmark_seconds,
                      detail::fmt("%.1f s", total) + " (t_f " + detail::fmt("%.2f s", row.t_f) + ", t_pcg " +
                          detail::fmt("%.2f s", row.report.t_pcg) + ")");

  const Index n2 = b.at("next").at("n").get<Index>(), m2 = b.at("next").at("m").get<Index>();
  const PrecondOptions o = precond_options(cfg, {n, m, PrecondKind::Cbd, 1});
  PrecondOptions o2 = o;
  o2.m = m2;
  const auto [small, large] = best_builds(KernelOperator(Grid(cfg.dim, n), cfg.layout), o,
                                          KernelOperator(Grid(cfg.dim, n2), cfg.layout), o2, 5);
  const double t_ratio = large.t_factor / small.t_factor;
  const double m_ratio = static_cast<double>(large.memory_bytes) / static_cast<double>(small.memory_bytes);
  const std::string step = detail::grid_label(cfg.dim, n) + " -> " + detail::grid_label(cfg.dim, n2);
  detail::expect_true(r, step + " t_f growth", t_ratio <= tolerance::growth,
                      detail::fmt("%.3f s", small.t_factor) + " -> " + detail::fmt("%.3f s", large.t_factor) +
                          " (ratio " + detail::fmt("%.2f", t_ratio) + ")");
  detail::expect_true(r, step + " m_f growth", m_ratio <= tolerance::growth,
                      detail::fmt("%.4f GB", static_cast<double>(small.memory_bytes) / 1e9) + " -> " +
                          detail::fmt("%.4f GB", static_cast<double>(large.memory_bytes) / 1e9) + " (ratio " +
                          detail::fmt("%.2f", m_ratio) + ")");
}

using SuiteFn = std::function<void(SuiteResult&, const json&)>;

inline const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> all{
      {"spectrum-2d", suite_spectrum_2d},     {"spectrum-3d", suite_spectrum_3d},
      {"many-subdomains", suite_many_subdomains}, {"structure", suite_structure},
      {"pairing", suite_pairing},             {"iterations-2d", suite_iterations_2d},
      {"iterations-3d", suite_iterations_3d}, {"interface", suite_interface},
      {"matvec", suite_matvec},               {"rskel-accuracy", suite_rskel_accuracy},
      {"rskel-scaling", suite_rskel_scaling}, {"ordering", suite_ordering},
      {"benchmark", suite_benchmark}};
  return all;
}

inline std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& s : suites()) names.push_back(s.first);
  return names;
}

/// Runs one suite. Numerical failures become a failed check; unknown names throw ConfigError.
inline SuiteResult run_suite(const std::string& name, const json& goldens) {
  const auto& all = suites();
  const auto it = std::find_if(all.begin(), all.end(), [&](const auto& s) { return s.first == name; });
  require(it != all.end(), "unknown golden suite '" + name + "'");
  SuiteResult r;
  r.suite = name;
  const Stopwatch clock;
  try {
    it->second(r, goldens);
  } catch (const NumericalError& e) {
    r.checks.push_back({"numerical failure", false, e.what()});
  }
  r.seconds = clock.seconds();
  return r;
}

}  // namespace iedd::golden
