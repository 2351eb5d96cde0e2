#pragma once

// Phase space B_g with kernel g(theta) = exp(nu theta): history segments on a
// truncated window [-H, 0], the integral segment norm, and the B_g norm.

#include <vector>

#include "evosteer/spectral_state.hpp"

namespace evosteer {

/// Samples of a history function on [-H, 0].
///
/// Stamps are nondecreasing; a repeated stamp holds the left and then the
/// right value of a jump. Values between stamps are linear interpolants.
class HistorySegment {
 public:
  HistorySegment(std::vector<double> times, std::vector<StateVector> states, double window,
                 double rate);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<StateVector>& states() const noexcept { return states_; }
  double window() const noexcept { return window_; }
  double rate() const noexcept { return rate_; }

  /// psi(theta); at a jump stamp returns the left value.
  StateVector at(double theta) const;

  /// ||psi(theta_i)||_X at every stamp.
  std::vector<double> sample_norms() const;

 private:
  std::vector<double> times_;
  std::vector<StateVector> states_;
  double window_;
  double rate_;
};

/// Time-indexed states on [0, T] in mode coordinates (the PC space).
///
/// states[j] is x(t_j) = x(t_j^-); right[j] is x(t_j^+) and differs from
/// states[j] only at impulse nodes.
struct PiecewiseTrajectory {
  std::vector<double> times;
  std::vector<ModeVector> states;
  std::vector<ModeVector> right;
  std::vector<int> impulse_nodes;

  int nodes() const noexcept { return static_cast<int>(times.size()); }
  double horizon() const { return times.back(); }

  /// Left-continuous evaluation with linear interpolation between nodes.
  ModeVector at(double t) const;

  /// Value just after t (differs from at(t) only at an impulse node).
  ModeVector right_at(double t) const;
};

/// Catalog of initial histories phi.
enum class HistoryKind { Zero, Constant, Mode };

struct HistorySpec {
  HistoryKind kind = HistoryKind::Zero;
  double amplitude = 0.0;
  int mode = 1;
  /// Mode kind: phi(theta) = amplitude * exp(decay * theta) * w_mode.
  double decay = 0.0;

  StateVector value_at(double theta, const GridPtr& grid, double p) const;
};

/// H = max(r, ln(1/eps_tail) / nu).
double history_window(double delay, double rate, double tail_tolerance = 1e-12);

/// Samples a catalog history on [-window, 0] with at most the given spacing.
HistorySegment sample_history(const HistorySpec& spec, const GridPtr& grid, double p,
                              double rate, double window, double spacing);

/// int_{-r}^0 ||psi(theta)|| dtheta.
double segment_norm(const HistorySegment& psi, double r);

/// int_{-H}^0 ||psi(theta)|| exp(nu theta) / nu dtheta (exchanged-order form).
double bg_norm(const HistorySegment& psi);

/// int_{-inf}^0 g(s) ||psi||_{[s,0]} ds with psi = 0 beyond -H, evaluated as
/// written (outer Gauss-Legendre over s, inner exact). Second route for bg_norm.
double bg_norm_double_integral(const HistorySegment& psi);

/// x_t(theta) = x~(t + theta) on [-H, 0], x~ = phi before 0 and x on [0, T].
HistorySegment shift_segment(const PiecewiseTrajectory& x, const SineBasis& basis,
                             const HistorySegment& phi, double t);

struct GrowthBoundReport {
  double t = 0.0;
  double lhs = 0.0;  ///< ||x_t||_{B_g}
  double rhs = 0.0;  ///< ||phi||_{B_g} + (t / nu) sup_{[0,t]} ||x||
  bool holds = true;
};

/// Checks ||x_t||_{B_g} <= ||phi||_{B_g} + l t sup_{0<=s<=t} ||x(s)||, l = 1/nu.
GrowthBoundReport check_growth_bound(const PiecewiseTrajectory& x, const SineBasis& basis,
                                     const HistorySegment& phi, double t,
                                     double tolerance = 1e-12);

/// Same check as check_growth_bound, reusing per-node norms across many t.
class GrowthBoundChecker {
 public:
  GrowthBoundChecker(const PiecewiseTrajectory& x, const SineBasis& basis,
                     const HistorySegment& phi);

  GrowthBoundReport check(double t, double tolerance = 1e-12) const;

 private:
  const PiecewiseTrajectory& x_;
  const SineBasis& basis_;
  const HistorySegment& phi_;
  double p_;
  double phi_bg_norm_;
  std::vector<double> phi_norms_;
  std::vector<double> left_norms_;
  std::vector<double> right_norms_;
  std::vector<bool> impulse_;
};

}  // namespace evosteer
