#include "commands.hpp"
#include "grid.hpp"
#include "output_table.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace memcost::cli;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "memcost");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<double> fields(const std::string& line) {
  std::vector<double> v;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
  return v;
}

std::string tmp(const std::string& name) { return ::testing::TempDir() + name; }

}  // namespace

TEST(Grid, InclusiveStopWithinHalfStep) {
  EXPECT_EQ(parse_grid("0:0.1:0.3").size(), 4u);
  EXPECT_EQ(parse_grid("0:0.1:0.3").back(), 0.3);
  EXPECT_EQ(parse_grid("0:0.1:0.34").size(), 4u);
  EXPECT_EQ(parse_grid("0:0.1:0.36").size(), 5u);
  EXPECT_TRUE(parse_grid("1:0.1:0").empty());
  EXPECT_EQ(parse_grid("2:1:2").size(), 1u);
  EXPECT_THROW(parse_grid("0:0:1"), std::invalid_argument);
  EXPECT_THROW(parse_grid("0:-1:1"), std::invalid_argument);
  EXPECT_THROW(parse_grid("0:1"), std::invalid_argument);
  EXPECT_THROW(parse_grid("a:1:2"), std::invalid_argument);
  EXPECT_THROW(parse_grid("0:1e-9:1"), std::invalid_argument);
}

TEST(OutputTable, RectangularAndFormats) {
  OutputTable t({"a", "b"});
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
  t.add_row({0.1, std::nan("")});
  t.add_config("k", "v");
  t.add_metadata("m", "x\"y");
  const std::string csv = to_csv(t);
  EXPECT_NE(csv.find("# config.k: v\n"), std::string::npos);
  EXPECT_NE(csv.find("a,b\n0.10000000000000001,nan\n"), std::string::npos);
  const auto j = nlohmann::json::parse(to_json(t));
  EXPECT_EQ(j["metadata"]["m"], "x\"y");
  EXPECT_TRUE(j["rows"][0][1].is_null());
  EXPECT_EQ(j["rows"][0][0].get<double>(), 0.1);
}

TEST(Cli, ThresholdReferenceRow) {
  const CliResult r = run_cli({"threshold", "--gamma", "2", "--sigma2", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "gamma,sigma2,eps_sigma2,eps_sigma2_approx,eps_ols2,rho_ols");
  EXPECT_NEAR(fields(lines[1])[2], 0.0148331477, 1e-10);
  EXPECT_NE(r.out.find("# config.gamma: 2"), std::string::npos);
  EXPECT_NE(r.out.find("# seed: 0"), std::string::npos);
}

TEST(Cli, ThresholdIdentityPopulation) {
  const std::string path = tmp("identity.spec");
  std::ofstream(path) << "1 1\n";
  const CliResult r = run_cli({"threshold", "--gamma", "2", "--sigma2", "0.1", "--pop", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto v = fields(data_lines(r.out)[1]);
  EXPECT_NEAR(v[6], v[2], 1e-10);
}

TEST(Cli, PopulationWarningsGoToErr) {
  const std::string path = tmp("scaled.spec");
  std::ofstream(path) << "4 1\n2 1\n";
  const CliResult r = run_cli({"threshold", "--gamma", "2", "--sigma2", "0.1", "--pop", path});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Cli, MalformedPopulationNamesLine) {
  const std::string path = tmp("bad.spec");
  std::ofstream(path) << "1 1\n0.5\n";
  const CliResult r = run_cli({"threshold", "--gamma", "2", "--sigma2", "0.1", "--pop", path});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({"threshold", "--sigma2", "0.1"}).code, 2);
  EXPECT_EQ(run_cli({"threshold", "--gamma", "0.5", "--sigma2", "0.1"}).code, 2);
  EXPECT_EQ(run_cli({"threshold", "--gamma", "2", "--sigma2", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"rho", "--gamma", "2", "--sigma2", "0.1", "--eps2", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"rho", "--gamma", "2", "--sigma2", "0.1", "--eps2", "1", "--eps", "1"}).code, 2);
  EXPECT_EQ(run_cli({"cost-curve", "--gamma", "2", "--sigma2", "0.1", "--grid", "0:0:1"}).code, 2);
  EXPECT_EQ(run_cli({"nonsense"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"threshold", "--gamma", "2", "--sigma2", "0.1", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, EpsIsSquared) {
  const CliResult a = run_cli({"rho", "--gamma", "2", "--sigma2", "0.1", "--eps2", "0.04"});
  const CliResult b = run_cli({"rho", "--gamma", "2", "--sigma2", "0.1", "--eps", "0.2"});
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_NEAR(fields(data_lines(a.out)[1])[1], fields(data_lines(b.out)[1])[1], 1e-12);
}

TEST(Cli, RhoBeyondCapIsRowMarker) {
  const CliResult r = run_cli({"rho", "--gamma", "2", "--sigma2", "0.1", "--grid", "0.02:1000:2000.02"});
  ASSERT_EQ(r.code, 0);
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(fields(lines[1])[4], 0.0);
  EXPECT_EQ(fields(lines[3])[4], 1.0);
}

TEST(Cli, CostCurveRegimesAndSign) {
  // eps_sigma^2 ~ 0.0148 and eps_ols^2 ~ 0.1728 at gamma = 2, sigma2 = 0.1.
  const CliResult r = run_cli({"cost-curve", "--gamma", "2", "--sigma2", "0.1", "--grid", "0:0.005:0.3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines[0], "eps2,rho,cost,costbar,regime,status");
  double prev_cost = 0.0;
  int sign_changes = 0;
  double prev_bar = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto v = fields(lines[i]);
    if (v[0] <= 0.0148331477) {
      EXPECT_EQ(v[2], 0.0);
      EXPECT_EQ(v[4], 0.0);
    } else {
      EXPECT_GT(v[2], 0.0);
      EXPECT_EQ(v[4], 1.0);
    }
    EXPECT_GE(v[2], prev_cost);
    prev_cost = v[2];
    if ((v[3] > 0) != (prev_bar > 0)) {
      ++sign_changes;
      EXPECT_GT(v[0], 0.1727);
      EXPECT_LT(v[0] - 0.005, 0.1728);
    }
    prev_bar = v[3];
  }
  EXPECT_EQ(sign_changes, 1);
}

TEST(Cli, EmptyGridGivesEmptyTable) {
  const CliResult r = run_cli({"cost-curve", "--gamma", "2", "--sigma2", "0.1", "--grid", "1:0.1:0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(data_lines(r.out).size(), 1u);
}

TEST(Cli, CsvAndJsonCarrySameNumbers) {
  const std::vector<std::string> base{"cost-curve", "--gamma", "3", "--sigma2", "0.05",
                                      "--grid", "0.01:0.02:0.09"};
  auto csv = base;
  auto json = base;
  json.insert(json.end(), {"--format", "json"});
  const CliResult a = run_cli(csv);
  const CliResult b = run_cli(json);
  const auto lines = data_lines(a.out);
  const auto j = nlohmann::json::parse(b.out);
  ASSERT_EQ(j["rows"].size(), lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto v = fields(lines[i]);
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(j["rows"][i - 1][k].get<double>(), v[k]);
  }
  EXPECT_EQ(j["config"]["gamma"], "3");
}

TEST(Cli, GnuplotScript) {
  const std::string data = tmp("curve.csv");
  const std::string script = tmp("curve.gp");
  const CliResult r = run_cli({"cost-curve", "--gamma", "2", "--sigma2", "0.1", "--grid", "0:0.05:0.2",
                         "--out", data, "--gnuplot", script});
  ASSERT_EQ(r.code, 0);
  const std::string gp = slurp(script);
  EXPECT_NE(gp.find("set datafile separator ','"), std::string::npos);
  EXPECT_NE(gp.find(data), std::string::npos);
  EXPECT_EQ(data_lines(slurp(data)).size(), 6u);
}

TEST(Cli, OlsRow) {
  const CliResult r = run_cli({"ols", "--gamma", "2", "--sigma2", "0.0001"});
  ASSERT_EQ(r.code, 0);
  const auto v = fields(data_lines(r.out)[1]);
  EXPECT_EQ(v[5], 4.0);
  EXPECT_NEAR(v[4] / v[5], 1.0, 0.05);
  EXPECT_NEAR(v[2], v[3], 1e-9 * v[2]);
}

TEST(Cli, SimulateRejectsUnderparameterized) {
  const CliResult r = run_cli({"simulate", "--n", "400", "--d", "300", "--sigma2", "0.1", "--rho", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("d = 300"), std::string::npos);
}

TEST(Cli, SimulateWritesFilesAndSummary) {
  const std::string prefix = tmp("sim");
  const CliResult r = run_cli({"simulate", "--n", "50", "--d", "100", "--sigma2", "0.1", "--rho", "0",
                         "--trials", "3", "--seed", "7", "--out", prefix});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trials = data_lines(slurp(prefix + "_trials.csv"));
  EXPECT_EQ(trials.size(), 4u);
  const auto summary = nlohmann::json::parse(slurp(prefix + "_summary.json"));
  EXPECT_EQ(summary["rows"].size(), 1u);
  EXPECT_EQ(summary["config"]["seed"], "7");
}

TEST(Cli, SimulateFullModeColumns) {
  const CliResult r = run_cli({"simulate", "--n", "30", "--d", "70", "--sigma2", "0.1", "--eps2", "0.05",
                         "--trials", "2", "--full", "--entries", "rademacher"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("identity_dev,stationarity"), std::string::npos);
}

TEST(Cli, SpectrumTable) {
  const CliResult r = run_cli({"spectrum", "--n", "100", "--gamma", "2", "--trials", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_lines(r.out).size(), 101u);
  EXPECT_NE(r.out.find("# kolmogorov_distance_trial0"), std::string::npos);
  EXPECT_EQ(run_cli({"spectrum", "--n", "100", "--d", "50"}).code, 2);
}

TEST(Cli, VerifyQuickPassesAndPerturbationFails) {
  const CliResult ok = run_cli({"verify", "--quick"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  const CliResult bad = run_cli({"verify", "--quick", "--inject-perturbation"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL  Lagrangian stationarity"), std::string::npos);
}

TEST(Binary, ExitCodesAndDeterminism) {
  const std::string bin = MEMCOST_BINARY;
  EXPECT_EQ(std::system((bin + " threshold --gamma 2 --sigma2 0.1 > /dev/null").c_str()), 0);
  const int usage = std::system((bin + " threshold --sigma2 0.1 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(usage), 2);
  const std::string a = tmp("det_a");
  const std::string b = tmp("det_b");
  const std::string args = " simulate --n 40 --d 90 --sigma2 0.1 --eps2 0.03 --trials 3 --seed 5"
                           " --entries rademacher --out ";
  ASSERT_EQ(std::system((bin + args + a + " > /dev/null").c_str()), 0);
  ASSERT_EQ(std::system((bin + args + b + " > /dev/null").c_str()), 0);
  EXPECT_EQ(slurp(a + "_trials.csv"), slurp(b + "_trials.csv"));
  EXPECT_EQ(slurp(a + "_summary.json"), slurp(b + "_summary.json"));
}
