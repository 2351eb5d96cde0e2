#pragma once

// Run configuration: a flat `key = value` file with [section] headers,
// tagged with `schema = evosteer/1`. Keys are addressed as section.key.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evosteer/evolution.hpp"
#include "evosteer/inclusion.hpp"
#include "evosteer/mild_solver.hpp"
#include "evosteer/phase_space.hpp"

namespace evosteer {

inline constexpr const char* kConfigSchema = "evosteer/1";

struct TargetSpec {
  std::vector<std::pair<int, double>> modes;  ///< x_T = sum c_n w_n
  std::vector<double> samples;                ///< or grid samples (M values)
};

struct RunConfig {
  std::string source = "<defaults>";

  double horizon = 1.0;
  int modes = 32;
  int grid_points = 513;
  double p = 2.0;
  int steps = 1000;

  CoefficientSpec coefficient = CoefficientSpec::constant(1.0);

  double kernel_rate = 1.0;
  double delay = 0.1;
  double window = 0.0;  ///< 0 selects max(r, ln(1/tail_tol)/nu)
  double history_spacing = 0.01;
  HistorySpec history;

  InclusionSpec inclusion;
  SelectionPolicy policy;
  ImpulseSpec impulses;

  double input_gain = 1.0;
  std::vector<double> lambdas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  int uc_samples = 64;
  double uc_floor = 1e-10;

  TargetSpec target;

  double quadrature_tol = 1e-10;
  double newton_tol = 1e-12;
  int newton_max_iter = 60;
  double gamma_tol = 1e-8;
  int gamma_max_iter = 200;
  double relaxation = 1.0;
  double tail_tol = 1e-12;
  std::uint64_t seed = 0;

  /// Line of every key read from the file, for anchored messages.
  std::map<std::string, int> lines;

  double effective_window() const;
  bool linear_case() const;
};

/// Parses configuration text; source names the file in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::string& path);

/// Range checks; messages carry source:line of the offending key.
void validate(const RunConfig& config);

/// Builds the discretized problem. Impulse times are snapped to the grid.
SteeringProblem build_problem(const RunConfig& config);

GammaOptions gamma_options(const RunConfig& config);
ResolventOptions resolvent_options(const RunConfig& config);

}  // namespace evosteer
