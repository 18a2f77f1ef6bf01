#pragma once

#include "output_table.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memcost::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kVersion = "0.1.0";

/// Bad flags or out-of-range values detected before dispatch.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::optional<double> gamma;
  std::optional<double> sigma2;
  std::optional<double> eps2;
  std::optional<double> eps;
  std::optional<double> rho;
  std::optional<int> n;
  std::optional<int> d;
  int trials = 20;
  std::uint64_t seed = 0;
  std::string pop;
  std::string grid;
  std::string grid_units = "eps2";
  std::string out;
  std::string format = "csv";
  std::string entries = "gaussian";
  std::string gnuplot;
  bool quick = false;
  bool inject_perturbation = false;
  bool full = false;
};

OutputTable cmd_threshold(const RunConfig& cfg, std::ostream& err);
OutputTable cmd_rho(const RunConfig& cfg, std::ostream& err);
OutputTable cmd_cost_curve(const RunConfig& cfg, std::ostream& err);
OutputTable cmd_ols(const RunConfig& cfg, std::ostream& err);
OutputTable cmd_spectrum(const RunConfig& cfg, std::ostream& err);

struct SimulateOutput {
  OutputTable trials;
  OutputTable summary;
};

SimulateOutput cmd_simulate(const RunConfig& cfg, std::ostream& err);

/// Writes a PASS/FAIL report; returns kExitOk iff every check passes.
int cmd_verify(const RunConfig& cfg, std::ostream& out);

/// Full command-line entry point: parses args (args[0] is the program
/// name), dispatches, writes results. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memcost::cli
