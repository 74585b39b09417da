#pragma once

// Experiment runner behind the CLI: sweeps over (n, m, kind, overlap),
// one table row per configuration, written as CSV or JSON.

#include "iedd/pcg.hpp"
#include "iedd/spectrum.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace iedd {

using json = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string command = "spectrum";  // spectrum | solve
  int dim = 2;
  std::vector<Index> n{16};
  std::vector<std::string> m{"2"};  // integer or "n/K"
  std::vector<PrecondKind> kinds{PrecondKind::Cbd};
  std::vector<Index> overlap{1};
  Backend backend = Backend::Exact;
  NodeLayout layout = NodeLayout::Midpoint;
  double eps = 1e-3;
  double tol = 1e-12;
  Index max_iters = 1000;
  std::uint64_t seed = 1;
  std::string rhs = "random";        // random | noise | ones | file:PATH
  std::string method = "auto";       // spectrum: auto | dense | lanczos
  Index dense_limit = 4096;          // largest Exact subdomain
  Index spectrum_limit = 4096;       // largest N for the dense spectrum
  std::string eigvec;                // "", "min" or "max"
  std::string eigvec_out;
  std::string out;                   // empty: stdout
  std::string format = "csv";
  int jobs = 1;

  void validate() const {
    require(command == "spectrum" || command == "solve", "unknown command '" + command + "'");
    require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    require(dim != 1 || command == "spectrum", "the 1D grid mode is only available for spectrum runs");
    for (Index v : n) require(v >= 2, "n must be at least 2");
    for (Index w : overlap) require(w >= 0, "overlap width must be non-negative");
    for (const std::string& s : m) parse_m(s, 0);
    require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    require(tol > 0.0 && tol < 1.0, "tol must lie in (0, 1)");
    require(max_iters >= 0, "max-iters must be non-negative");
    require(rhs == "random" || rhs == "noise" || rhs == "ones" || rhs.rfind("file:", 0) == 0,
            "unknown rhs mode '" + rhs + "'");
    require(method == "auto" || method == "dense" || method == "lanczos", "unknown spectrum method '" + method + "'");
    require(dense_limit >= 1 && spectrum_limit >= 1, "dense limits must be positive");
    require(eigvec.empty() || eigvec == "min" || eigvec == "max", "eigvec must be 'min' or 'max'");
    require(eigvec.empty() || !eigvec_out.empty(), "--eigvec needs --eigvec-out");
    require(eigvec.empty() || command == "spectrum", "--eigvec applies to spectrum runs");
    require(format == "csv" || format == "json", "format must be csv or json");
    require(jobs >= 1, "jobs must be at least 1");
  }

  /// Partitions per axis for an entry of `m` at grid size n (n = 0: syntax check only).
  static Index parse_m(const std::string& s, Index n) {
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        require(used == s.size() && v >= 1, "invalid m '" + s + "'");
        return v;
      }
      require(s.substr(0, slash) == "n", "invalid m '" + s + "' (expected an integer or n/K)");
      std::size_t used = 0;
      const std::string tail = s.substr(slash + 1);
      const long k = std::stol(tail, &used);
      require(used == tail.size() && k >= 1, "invalid m '" + s + "'");
      if (n == 0) return 1;
      require(n % k == 0, "m = " + s + " is not an integer for n = " + std::to_string(n));
      return n / k;
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError("invalid m '" + s + "'");
    }
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["dim"] = dim;
    j["n"] = n;
    j["m"] = m;
    std::vector<std::string> k;
    for (PrecondKind p : kinds) k.emplace_back(to_string(p));
    j["precond"] = k;
    j["overlap"] = overlap;
    j["backend"] = std::string(to_string(backend));
    j["layout"] = std::string(to_string(layout));
    j["eps"] = eps;
    j["tol"] = tol;
    j["max_iters"] = max_iters;
    j["seed"] = seed;
    j["rhs"] = rhs;
    j["method"] = method;
    j["dense_limit"] = dense_limit;
    j["spectrum_limit"] = spectrum_limit;
    if (!eigvec.empty()) j["eigvec"] = eigvec;
    j["format"] = format;
    j["jobs"] = jobs;
    return j;
  }
};

struct RowKey {
  Index n = 0;
  Index m = 0;
  PrecondKind kind = PrecondKind::None;
  Index overlap = 1;
};

struct SpectrumRow {
  RowKey key;
  Index N = 0, M = 0, D = 0;
  SpectrumReport report;
  std::string status = "ok";
  std::string error;
};

struct SolveRow {
  RowKey key;
  Index N = 0, M = 0, D = 0, S = 0;
  double t_f = 0.0;
  double m_f = 0.0;  // GB
  PcgReport report;
  double solution_error = std::nan("");  // only when u_exact is known
  std::string status = "ok";
  std::string error;
};

/// Cartesian product n x m x kind x overlap, in that nesting order.
inline std::vector<RowKey> expand_sweep(const ExperimentConfig& cfg) {
  std::vector<RowKey> keys;
  for (Index n : cfg.n)
    for (const std::string& ms : cfg.m)
      for (PrecondKind k : cfg.kinds)
        for (Index w : cfg.overlap) keys.push_back({n, ExperimentConfig::parse_m(ms, n), k, w});
  return keys;
}

inline PrecondOptions precond_options(const ExperimentConfig& cfg, const RowKey& key) {
  PrecondOptions o;
  o.kind = key.kind;
  o.backend = cfg.backend;
  o.m = key.m;
  o.overlap_width = key.overlap;
  o.eps = cfg.eps;
  o.dense_limit = cfg.dense_limit;
  return o;
}

struct Rhs {
  Vector f;
  Vector u_exact;  // empty unless known
};

inline Vector standard_normal(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Vector read_vector_file(const std::string& path, Index n) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open rhs file '" + path + "'");
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      vals.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ConfigError("rhs file '" + path + "': cannot parse '" + line + "'");
    }
  }
  require(static_cast<Index>(vals.size()) == n, "rhs file '" + path + "' has " + std::to_string(vals.size()) +
                                                    " values, expected N = " + std::to_string(n));
  return Eigen::Map<const Vector>(vals.data(), n);
}

/// random: f = A u with u ~ N(0,1); noise: f ~ N(0,1); ones; file:PATH.
inline Rhs make_rhs(const std::string& mode, const ToeplitzMatvec& A, std::uint64_t seed) {
  const Index n = A.size();
  Rhs r;
  if (mode == "random") {
    r.u_exact = standard_normal(n, seed);
    r.f = A.apply(r.u_exact);
  } else if (mode == "noise") {
    r.f = standard_normal(n, seed);
  } else if (mode == "ones") {
    r.f = Vector::Ones(n);
  } else if (mode.rfind("file:", 0) == 0) {
    r.f = read_vector_file(mode.substr(5), n);
  } else {
    throw ConfigError("unknown rhs mode '" + mode + "'");
  }
  return r;
}

inline Index lattice_count(Index m, int dim, PrecondKind kind) {
  return kind == PrecondKind::None ? 1 : ipow(m, dim);
}

inline SpectrumRow run_spectrum_row(const ExperimentConfig& cfg, const RowKey& key) {
  SpectrumRow row;
  row.key = key;
  row.N = ipow(key.n, cfg.dim);
  row.M = lattice_count(key.m, cfg.dim, key.kind);
  const Grid grid(cfg.dim, key.n);
  const KernelOperator op(grid, cfg.layout);
  const Preconditioner P = Preconditioner::build(op, precond_options(cfg, key));
  row.D = P.kind() == PrecondKind::None ? 1 : P.num_subdomains();
  const bool dense = cfg.method == "dense" || (cfg.method == "auto" && row.N <= cfg.spectrum_limit);
  if (dense) {
    row.report = preconditioned_spectrum(op, P, std::max(cfg.spectrum_limit, row.N));
  } else {
    const ToeplitzMatvec A(op);
    LanczosOptions lo;
    lo.seed = cfg.seed;
    row.report = lanczos_spectrum(A, P, lo);
  }
  row.report.D = row.D;
  return row;
}

inline SolveRow run_solve_row(const ExperimentConfig& cfg, const RowKey& key) {
  SolveRow row;
  row.key = key;
  row.N = ipow(key.n, cfg.dim);
  row.M = lattice_count(key.m, cfg.dim, key.kind);
  const Grid grid(cfg.dim, key.n);
  const KernelOperator op(grid, cfg.layout);
  const ToeplitzMatvec A(op);
  const Rhs rhs = make_rhs(cfg.rhs, A, cfg.seed);
  const Preconditioner P = Preconditioner::build(op, precond_options(cfg, key));
  row.D = P.kind() == PrecondKind::None ? 1 : P.num_subdomains();
  row.S = P.stats().S;
  row.t_f = P.stats().t_factor;
  row.m_f = static_cast<double>(P.stats().memory_bytes) / 1e9;
  PcgOptions po;
  po.tol = cfg.tol;
  po.max_iters = cfg.max_iters;
  const PcgResult res = pcg([&](const Vector& x) { return A.apply(x); }, [&](const Vector& x) { return P.apply(x); },
                            rhs.f, po);
  row.report = res.report;
  if (rhs.u_exact.size() > 0) row.solution_error = (res.u - rhs.u_exact).norm() / rhs.u_exact.norm();
  return row;
}

namespace detail {

template <class Row>
void record_failure(Row& row, const RowKey& key, int dim, const std::exception& e, const char* status) {
  row.key = key;
  row.N = ipow(key.n, dim);
  row.M = lattice_count(key.m, dim, key.kind);
  row.status = status;
  row.error = e.what();
}

/// Runs fn(key) for every key on up to `jobs` threads; results stay in key order.
template <class Row, class Fn>
std::vector<Row> run_rows(const std::vector<RowKey>& keys, int dim, int jobs, Fn fn) {
  std::vector<Row> rows(keys.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      try {
        rows[i] = fn(keys[i]);
      } catch (const ConfigError& e) {
        record_failure(rows[i], keys[i], dim, e, "config-error");
      } catch (const NumericalError& e) {
        record_failure(rows[i], keys[i], dim, e, "numerical-error");
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(keys.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

inline std::string fmt(double v, const char* spec = "%.10g") {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

inline json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace detail

inline std::vector<SpectrumRow> run_spectrum(const ExperimentConfig& cfg) {
  cfg.validate();
  return detail::run_rows<SpectrumRow>(expand_sweep(cfg), cfg.dim, cfg.jobs,
                                       [&](const RowKey& k) { return run_spectrum_row(cfg, k); });
}

inline std::vector<SolveRow> run_solve(const ExperimentConfig& cfg) {
  cfg.validate();
  return detail::run_rows<SolveRow>(expand_sweep(cfg), cfg.dim, cfg.jobs,
                                    [&](const RowKey& k) { return run_solve_row(cfg, k); });
}

inline const std::vector<std::string>& spectrum_columns() {
  static const std::vector<std::string> c{"N",          "M",          "D",      "kind",
                                          "overlap_width", "lambda_max", "lambda_min", "multiplicity_at_max",
                                          "method",     "status",     "error"};
  return c;
}

inline const std::vector<std::string>& solve_columns() {
  static const std::vector<std::string> c{"N",     "M",     "D",     "kind",  "backend",
                                          "overlap_width", "S", "t_f", "m_f", "t_s",
                                          "n_it",  "t_pcg", "achieved_residual", "true_residual",
                                          "solution_error", "converged", "stagnated", "status", "error"};
  return c;
}

inline void write_header(std::ostream& os, const ExperimentConfig& cfg, const std::vector<std::string>& columns) {
  os << "# iedd " << version << "\n# config " << cfg.to_json().dump() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
}

inline void write_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SpectrumRow>& rows) {
  using detail::fmt;
  write_header(os, cfg, spectrum_columns());
  for (const SpectrumRow& r : rows) {
    const bool ok = r.status == "ok";
    os << r.N << ',' << r.M << ',' << r.D << ',' << to_string(r.key.kind) << ',' << r.key.overlap << ','
       << (ok ? fmt(r.report.lambda_max) : "") << ',' << (ok ? fmt(r.report.lambda_min) : "") << ','
       << (ok && r.report.method == "dense" ? std::to_string(r.report.multiplicity_at_max) : "") << ','
       << (ok ? r.report.method : "") << ',' << r.status << ',' << detail::csv_field(r.error) << "\n";
  }
}

inline void write_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SolveRow>& rows) {
  using detail::fmt;
  write_header(os, cfg, solve_columns());
  for (const SolveRow& r : rows) {
    const bool ok = r.status == "ok";
    os << r.N << ',' << r.M << ',' << r.D << ',' << to_string(r.key.kind) << ',' << to_string(cfg.backend) << ','
       << r.key.overlap << ',';
    if (ok) {
      os << r.S << ',' << fmt(r.t_f, "%.3e") << ',' << fmt(r.m_f, "%.3g") << ',' << fmt(r.report.t_s, "%.3e") << ','
         << r.report.n_it << ',' << fmt(r.report.t_pcg, "%.3e") << ',' << fmt(r.report.achieved_residual, "%.3e")
         << ',' << fmt(r.report.true_residual, "%.3e") << ',' << fmt(r.solution_error, "%.3e") << ','
         << (r.report.converged ? "true" : "false") << ',' << (r.report.stagnated ? "true" : "false") << ',';
    } else {
      os << ",,,,,,,,,,,";
    }
    os << r.status << ',' << detail::csv_field(r.error) << "\n";
  }
}

inline json to_json(const ExperimentConfig& cfg, const std::vector<SpectrumRow>& rows) {
  json j;
  j["version"] = version;
  j["config"] = cfg.to_json();
  j["rows"] = json::array();
  for (const SpectrumRow& r : rows) {
    json row;
    row["N"] = r.N;
    row["M"] = r.M;
    row["D"] = r.D;
    row["kind"] = std::string(to_string(r.key.kind));
    row["overlap_width"] = r.key.overlap;
    if (r.status == "ok") {
      row["lambda_max"] = r.report.lambda_max;
      row["lambda_min"] = r.report.lambda_min;
      if (r.report.method == "dense") row["multiplicity_at_max"] = r.report.multiplicity_at_max;
      row["method"] = r.report.method;
      if (r.report.method == "lanczos") row["lanczos_steps"] = r.report.iterations;
    }
    row["status"] = r.status;
    if (!r.error.empty()) row["error"] = r.error;
    j["rows"].push_back(row);
  }
  return j;
}

inline json to_json(const ExperimentConfig& cfg, const std::vector<SolveRow>& rows) {
  json j;
  j["version"] = version;
  j["config"] = cfg.to_json();
  j["rows"] = json::array();
  for (const SolveRow& r : rows) {
    json row;
    row["N"] = r.N;
    row["M"] = r.M;
    row["D"] = r.D;
    row["kind"] = std::string(to_string(r.key.kind));
    row["backend"] = std::string(to_string(cfg.backend));
    row["overlap_width"] = r.key.overlap;
    if (r.status == "ok") {
      row["S"] = r.S;
      row["t_f"] = r.t_f;
      row["m_f"] = r.m_f;
      row["t_s"] = r.report.t_s;
      row["n_it"] = r.report.n_it;
      row["t_pcg"] = r.report.t_pcg;
      row["achieved_residual"] = r.report.achieved_residual;
      row["true_residual"] = r.report.true_residual;
      row["solution_error"] = detail::nullable(r.solution_error);
      row["converged"] = r.report.converged;
      row["stagnated"] = r.report.stagnated;
    }
    row["status"] = r.status;
    if (!r.error.empty()) row["error"] = r.error;
    j["rows"].push_back(row);
  }
  return j;
}

/// CSV rows `x,y[,z],value` over the grid points.
inline void write_eigenvector_csv(std::ostream& os, const Grid& grid, const Vector& v) {
  static const char* axes[] = {"x", "y", "z"};
  for (int k = 0; k < grid.dim(); ++k) os << axes[k] << ',';
  os << "value\n";
  for (Index i = 0; i < grid.size(); ++i) {
    const Point p = grid.point(i);
    for (int k = 0; k < grid.dim(); ++k) os << detail::fmt(p[k], "%.8g") << ',';
    os << detail::fmt(v[i], "%.17g") << "\n";
  }
}

/// Extremal eigenvector of the first sweep row, written to cfg.eigvec_out.
inline void dump_eigenvector(const ExperimentConfig& cfg) {
  const std::vector<RowKey> keys = expand_sweep(cfg);
  require(keys.size() == 1, "--eigvec needs a single configuration, the sweep has " + std::to_string(keys.size()));
  const Grid grid(cfg.dim, keys[0].n);
  require(grid.size() <= cfg.spectrum_limit, "--eigvec needs the dense spectrum (N <= spectrum limit)");
  const KernelOperator op(grid, cfg.layout);
  const Preconditioner P = Preconditioner::build(op, precond_options(cfg, keys[0]));
  const Vector v = extremal_eigenvector(dense_spectrum(op, P, true, grid.size()),
                                        cfg.eigvec == "min" ? Extremal::Min : Extremal::Max);
  std::ofstream out(cfg.eigvec_out);
  require(static_cast<bool>(out), "cannot write '" + cfg.eigvec_out + "'");
  write_eigenvector_csv(out, grid, v);
}

/// 0 when every row succeeded, otherwise 1 (config) or 2 (numerical).
template <class Row>
int sweep_exit_code(const std::vector<Row>& rows) {
  int code = 0;
  for (const Row& r : rows) {
    if (r.status == "config-error") return 1;
    if (r.status == "numerical-error") code = 2;
  }
  return code;
}

}  // namespace iedd
