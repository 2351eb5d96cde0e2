#pragma once

// Experiment runners behind the command line: invariant suites, Gramian
// dumps, single steering runs and the lambda sweep, with their CSV, JSON and
// SVG renderings.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evosteer/config.hpp"
#include "evosteer/mild_solver.hpp"
#include "evosteer/steering.hpp"

namespace evosteer {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInvariant = 3,
  kExitNonConvergence = 4,
};

enum class OutputFormat { Csv, Json };

struct CommandOptions {
  std::optional<double> lambda;
  std::string out_dir;  ///< empty: print only
  OutputFormat format = OutputFormat::Csv;
  int snapshot_stride = 0;  ///< > 0 also dumps grid values every k-th node
};

/// Overrides the run seed (also used by the seeded selection policy).
void apply_seed(RunConfig& config, std::uint64_t seed);

struct Metric {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::vector<Metric> metrics;
  std::string note;
};

struct CheckReport {
  std::vector<SuiteResult> suites;
  bool passed() const;
};

/// Property suites over the configured model: duality, transforms, evolution
/// laws, Gramian, resolvent, phase space, unique continuation, selections,
/// impulses.
CheckReport run_checks(const RunConfig& config);

struct SweepRow {
  double lambda = 0.0;
  double terminal_error = 0.0;
  double control_l2 = 0.0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SolveReport> reports;
  /// Errors nonincreasing in lambda order; only asserted in the linear p = 2 case.
  bool monotone = true;
};

/// One Gamma iteration per lambda, run concurrently; rows keep the config order.
SweepResult run_sweep(const RunConfig& config);

/// Single steering run at lambda.
SteeringResult run_steer(const RunConfig& config, double lambda);

std::string format_number(double v);

std::string check_json(const CheckReport& report);
std::string check_csv(const CheckReport& report);
std::string gramian_csv(const GramianMatrix& psi);
std::string gramian_json(const GramianMatrix& psi);
std::string trajectory_csv(const PiecewiseTrajectory& x);
std::string trajectory_grid_csv(const PiecewiseTrajectory& x, const SineBasis& basis, double p,
                                int stride);
std::string control_csv(const ControlSignal& u);
std::string report_json(const SolveReport& report);
std::string sweep_csv(const SweepResult& sweep);
std::string sweep_json(const SweepResult& sweep, bool linear);
std::string sweep_svg(const SweepResult& sweep);

int cmd_check(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_gramian(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_steer(const RunConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& out);

}  // namespace evosteer
