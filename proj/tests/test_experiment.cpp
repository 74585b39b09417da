#include "iedd/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace iedd;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(IEDD_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("iedd_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Experiment, ParseM) {
  EXPECT_EQ(ExperimentConfig::parse_m("4", 32), 4);
  EXPECT_EQ(ExperimentConfig::parse_m("n/4", 32), 8);
  EXPECT_THROW(ExperimentConfig::parse_m("n/3", 32), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse_m("x/4", 32), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse_m("0", 32), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse_m("4a", 32), ConfigError);
}

TEST(Experiment, SweepIsCartesianProductInOrder) {
  ExperimentConfig cfg;
  cfg.n = {8, 16};
  cfg.m = {"2", "n/4"};
  cfg.kinds = {PrecondKind::Jacobi, PrecondKind::Cbd};
  cfg.overlap = {1};
  const std::vector<RowKey> keys = expand_sweep(cfg);
  ASSERT_EQ(keys.size(), 8u);
  EXPECT_EQ(keys[0].n, 8);
  EXPECT_EQ(keys[2].m, 2);  // n/4 at n = 8
  EXPECT_EQ(keys[1].kind, PrecondKind::Cbd);
  EXPECT_EQ(keys[7].n, 16);
  EXPECT_EQ(keys[7].m, 4);
}

TEST(Experiment, ValidateRejectsBadValues) {
  ExperimentConfig cfg;
  cfg.eps = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rhs = "zeros";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.command = "solve";
  cfg.dim = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.eigvec = "max";
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Experiment, EmptySweepWritesHeaderOnly) {
  ExperimentConfig cfg;
  cfg.n = {};
  std::ostringstream os;
  write_csv(os, cfg, run_spectrum(cfg));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# iedd " + std::string(version), 0), 0u);
  EXPECT_NE(s.find("# config {"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}

TEST(Experiment, SpectrumRowsAndJson) {
  ExperimentConfig cfg;
  cfg.n = {8};
  cfg.kinds = {PrecondKind::Schwarz};
  cfg.layout = NodeLayout::Endpoint;
  const std::vector<SpectrumRow> rows = run_spectrum(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[0].N, 64);
  EXPECT_EQ(rows[0].M, 4);
  EXPECT_EQ(rows[0].D, 4);
  EXPECT_NEAR(rows[0].report.lambda_max, 4.0, 1e-8);
  const json j = to_json(cfg, rows);
  EXPECT_EQ(j["version"], version);
  EXPECT_EQ(j["config"]["layout"], "endpoint");
  EXPECT_EQ(j["rows"][0]["multiplicity_at_max"], 4);
}

TEST(Experiment, RowFailureIsCaptured) {
  ExperimentConfig cfg;
  cfg.n = {8, 10};
  cfg.m = {"4"};
  cfg.kinds = {PrecondKind::Jacobi};
  const std::vector<SpectrumRow> rows = run_spectrum(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[1].status, "config-error");
  EXPECT_EQ(rows[1].N, 100);
  EXPECT_FALSE(rows[1].error.empty());
  EXPECT_EQ(sweep_exit_code(rows), 1);
  std::ostringstream os;
  write_csv(os, cfg, rows);
  EXPECT_NE(os.str().find("config-error"), std::string::npos);
}

TEST(Experiment, SolveIsDeterministicAcrossJobs) {
  ExperimentConfig cfg;
  cfg.command = "solve";
  cfg.n = {16};
  cfg.m = {"2", "4"};
  cfg.kinds = {PrecondKind::Jacobi, PrecondKind::Schwarz, PrecondKind::Cbd};
  const std::vector<SolveRow> a = run_solve(cfg);
  cfg.jobs = 4;
  const std::vector<SolveRow> b = run_solve(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].status, "ok");
    EXPECT_EQ(a[i].report.n_it, b[i].report.n_it);
    EXPECT_EQ(a[i].solution_error, b[i].solution_error);
    EXPECT_LE(a[i].solution_error, 1e-8);
    EXPECT_TRUE(a[i].report.converged);
  }
  EXPECT_EQ(sweep_exit_code(a), 0);
}

TEST(Experiment, RhsModes) {
  const KernelOperator op(Grid(2, 4));
  const ToeplitzMatvec A(op);
  const Rhs r = make_rhs("random", A, 3);
  EXPECT_LE((A.apply(r.u_exact) - r.f).norm(), 1e-14 * r.f.norm());
  EXPECT_EQ(make_rhs("noise", A, 3).u_exact.size(), 0);
  EXPECT_EQ(make_rhs("noise", A, 3).f, standard_normal(16, 3));
  EXPECT_EQ(make_rhs("ones", A, 3).f, Vector::Ones(16));

  const std::string path = temp_path("rhs.txt");
  {
    std::ofstream out(path);
    for (int i = 0; i < 16; ++i) out << 0.5 * i << "\n";
    out << "\n";
  }
  const Vector f = make_rhs("file:" + path, A, 0).f;
  EXPECT_EQ(f[15], 7.5);
  {
    std::ofstream out(path);
    out << "1.0\n2.0\n";
  }
  EXPECT_THROW(make_rhs("file:" + path, A, 0), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(make_rhs("file:" + path, A, 0), ConfigError);
}

TEST(Experiment, EigenvectorDump) {
  ExperimentConfig cfg;
  cfg.n = {8};
  cfg.kinds = {PrecondKind::Schwarz};
  cfg.eigvec = "min";
  cfg.eigvec_out = temp_path("eig.csv");
  dump_eigenvector(cfg);
  const std::string s = slurp(cfg.eigvec_out);
  EXPECT_EQ(s.rfind("x,y,value\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 65);
  std::filesystem::remove(cfg.eigvec_out);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("spectrum --n 8 --precond schwarz"), 0);
  EXPECT_EQ(cli("solve --n 8 --m 2 --precond jacobi --rhs ones"), 0);
  EXPECT_EQ(cli("spectrum --n 8 --precond ilu"), 1);
  EXPECT_EQ(cli("spectrum --n 8 --m n/3"), 1);
  EXPECT_EQ(cli("solve --dim 4"), 1);
  EXPECT_EQ(cli("golden"), 1);
  EXPECT_EQ(cli("golden no-such-suite"), 1);
  EXPECT_EQ(cli("golden --list"), 0);
  EXPECT_EQ(cli("frobnicate"), 1);
}

TEST(Cli, WritesOutputFile) {
  const std::string path = temp_path("out.json");
  ASSERT_EQ(cli("spectrum --n 8,16 --m n/4 --precond cbd --format json --out " + path), 0);
  const json j = json::parse(slurp(path));
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][1]["N"], 256);
  EXPECT_EQ(j["config"]["m"][0], "n/4");
  std::filesystem::remove(path);
}

TEST(Cli, GoldenMatvecSuitePasses) { EXPECT_EQ(cli("golden matvec"), 0); }
