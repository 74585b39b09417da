// iedd: spectrum / solve / golden experiment runner.

#include "iedd/iedd.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kGolden = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<iedd::Index> parse_ints(const std::string& s, const char* what) {
  std::vector<iedd::Index> out;
  for (const std::string& t : split_list(s)) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw iedd::ConfigError(std::string("invalid ") + what + " '" + t + "'");
    out.push_back(v);
  }
  return out;
}

struct Args {
  std::string n = "16", m = "2", precond = "cbd", overlap = "1";
  std::string backend = "exact", layout = "midpoint";
};

void add_common(CLI::App* sub, iedd::ExperimentConfig& cfg, Args& a) {
  sub->add_option("--dim", cfg.dim, "Spatial dimension (1 only for spectrum)")->capture_default_str();
  sub->add_option("--n", a.n, "Points per axis, comma list")->capture_default_str();
  sub->add_option("--m", a.m, "Partitions per axis, comma list of integers or n/K")->capture_default_str();
  sub->add_option("--precond", a.precond, "none|jacobi|schwarz|cbd|rs-global, comma list")->capture_default_str();
  sub->add_option("--overlap", a.overlap, "Overlap widths, comma list")->capture_default_str();
  sub->add_option("--backend", a.backend, "exact|rskel")->capture_default_str();
  sub->add_option("--layout", a.layout, "Kernel node layout: midpoint|endpoint")->capture_default_str();
  sub->add_option("--eps", cfg.eps, "Relative ID accuracy")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--dense-limit", cfg.dense_limit, "Largest subdomain factorized densely")->capture_default_str();
  sub->add_option("--out", cfg.out, "Output file (default stdout)");
  sub->add_option("--format", cfg.format, "csv|json")->capture_default_str();
  sub->add_option("--jobs", cfg.jobs, "Concurrent sweep rows")->capture_default_str();
}

void finish_config(iedd::ExperimentConfig& cfg, const Args& a) {
  cfg.n = parse_ints(a.n, "n");
  cfg.m = split_list(a.m);
  cfg.overlap = parse_ints(a.overlap, "overlap");
  cfg.kinds.clear();
  for (const std::string& k : split_list(a.precond)) cfg.kinds.push_back(iedd::parse_precond_kind(k));
  cfg.backend = iedd::parse_backend(a.backend);
  cfg.layout = iedd::parse_node_layout(a.layout);
  cfg.validate();
}

template <class Rows>
void emit(const iedd::ExperimentConfig& cfg, const Rows& rows) {
  std::ofstream file;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    if (!file) throw iedd::ConfigError("cannot write '" + cfg.out + "'");
  }
  std::ostream& os = cfg.out.empty() ? std::cout : file;
  if (cfg.format == "json")
    os << iedd::to_json(cfg, rows).dump(2) << "\n";
  else
    iedd::write_csv(os, cfg, rows);
  for (const auto& r : rows)
    if (r.status != "ok") std::cerr << "row N=" << r.N << " " << iedd::to_string(r.key.kind) << ": " << r.error << "\n";
}

int run_golden(const std::vector<std::string>& requested, const std::string& path, bool list) {
  namespace g = iedd::golden;
  if (list) {
    for (const std::string& s : g::suite_names()) std::cout << s << "\n";
    return kOk;
  }
  if (requested.empty()) {
    std::cerr << "usage: iedd golden SUITE... | all | --list\n";
    return kConfig;
  }
  std::vector<std::string> names = requested;
  if (names.size() == 1 && names[0] == "all") names = g::suite_names();
  const std::vector<std::string> known = g::suite_names();
  for (const std::string& s : names)
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw iedd::ConfigError("unknown golden suite '" + s + "' (see iedd golden --list)");
  const iedd::json goldens = g::load_goldens(path);
  bool ok = true;
  for (const std::string& s : names) {
    const g::SuiteResult r = g::run_suite(s, goldens);
    for (const g::Check& c : r.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << s << ": " << c.name << (c.detail.empty() ? "" : ": ") << c.detail
                << "\n";
    std::cout << (r.passed() ? "PASS " : "FAIL ") << s << " (" << r.checks.size() - r.failures() << "/"
              << r.checks.size() << " checks, " << iedd::golden::detail::fmt("%.1f", r.seconds) << " s)\n"
              << std::flush;
    ok = ok && r.passed();
  }
  return ok ? kOk : kGolden;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-decomposition preconditioners for a Laplace volume integral equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(iedd::version));

  iedd::ExperimentConfig spec_cfg, solve_cfg;
  spec_cfg.command = "spectrum";
  solve_cfg.command = "solve";
  Args spec_args, solve_args;

  CLI::App* spectrum = app.add_subcommand("spectrum", "Extremal eigenvalues of the preconditioned operator");
  add_common(spectrum, spec_cfg, spec_args);
  spectrum->add_option("--method", spec_cfg.method, "auto|dense|lanczos")->capture_default_str();
  spectrum->add_option("--spectrum-limit", spec_cfg.spectrum_limit, "Largest N for the dense route")
      ->capture_default_str();
  spectrum->add_option("--eigvec", spec_cfg.eigvec, "Dump the min or max eigenvector");
  spectrum->add_option("--eigvec-out", spec_cfg.eigvec_out, "CSV path for --eigvec");

  CLI::App* solve = app.add_subcommand("solve", "PCG solve with the FFT matvec");
  add_common(solve, solve_cfg, solve_args);
  solve->add_option("--tol", solve_cfg.tol, "Relative residual tolerance")->capture_default_str();
  solve->add_option("--max-iters", solve_cfg.max_iters, "Iteration cap")->capture_default_str();
  solve->add_option("--rhs", solve_cfg.rhs, "random|noise|ones|file:PATH")->capture_default_str();

  std::vector<std::string> suites;
  std::string golden_path = iedd::golden::default_golden_path();
  bool list = false;
  CLI::App* golden = app.add_subcommand("golden", "Check results against stored golden values");
  golden->add_option("suites", suites, "Suite names, or 'all'");
  golden->add_option("--goldens", golden_path, "Golden value file")->capture_default_str();
  golden->add_flag("--list", list, "List suite names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (spectrum->parsed()) {
      finish_config(spec_cfg, spec_args);
      const auto rows = iedd::run_spectrum(spec_cfg);
      emit(spec_cfg, rows);
      if (!spec_cfg.eigvec.empty()) iedd::dump_eigenvector(spec_cfg);
      return iedd::sweep_exit_code(rows);
    }
    if (solve->parsed()) {
      finish_config(solve_cfg, solve_args);
      const auto rows = iedd::run_solve(solve_cfg);
      emit(solve_cfg, rows);
      return iedd::sweep_exit_code(rows);
    }
    return run_golden(suites, golden_path, list);
  } catch (const iedd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const iedd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (dynamic_cast<const iedd::NotPositiveDefinite*>(&e)) std::cerr << "hint: try a smaller --eps\n";
    return kNumerical;
  }
}
