#pragma once

// Time stepping of the impulsive mild solution
//   x(t) = U(t,0) phi(0) + int_0^t U(t,s) [B u(s) + f(s)] ds + sum_{tau_k < t} U(t,tau_k) I_k(x(tau_k))
// and the fixed-point loop coupling trajectory, selection and feedback control.

#include <functional>
#include <optional>
#include <vector>

#include "evosteer/evolution.hpp"
#include "evosteer/inclusion.hpp"
#include "evosteer/phase_space.hpp"
#include "evosteer/spectral_state.hpp"
#include "evosteer/steering.hpp"
#include "evosteer/time_grid.hpp"

namespace evosteer {

/// Factor of a separable impulse kernel: sin(m xi) for m >= 1, or 1 for m = 0.
struct KernelFactor {
  int frequency = 1;
  double operator()(double xi) const;
};

/// I(x)(xi) = c s(xi) int_0^pi r(eta) cos^2(x(eta)) d eta at time tau.
struct Impulse {
  double time = 0.0;
  double coefficient = 0.0;
  KernelFactor source;
  KernelFactor response;

  StateVector apply(const StateVector& x) const;
  /// d = |c| ||s||_p int |r| >= sup_x ||I(x)||_p.
  double bound(const SpatialGrid& grid, double p) const;
};

struct ImpulseSpec {
  std::vector<Impulse> impulses;

  /// Snaps every time to the nearest grid time; throws a configuration error if
  /// a time moves by more than half a step, leaves (0, T), or two collide.
  std::vector<int> snap(const TimeGrid& grid);

  double bound_sum(const SpatialGrid& grid, double p) const;
};

StateVector apply_impulse(const ImpulseSpec& spec, int k, const StateVector& x);

/// Everything one steering run needs. Impulse times must already be on the grid.
struct SteeringProblem {
  EvolutionFamily family;
  SineBasis basis;
  InputOperator input;
  TimeGrid grid;
  double p = 2.0;
  HistorySpec history;
  double kernel_rate = 1.0;
  double history_window = 30.0;
  double history_spacing = 0.01;
  InclusionSpec inclusion;
  SelectionPolicy policy;
  ImpulseSpec impulses;
  std::vector<int> impulse_nodes;
  StateVector target;

  SteeringProblem(EvolutionFamily family, SineBasis basis, InputOperator input, TimeGrid grid,
                  double p, StateVector target);

  ModeVector initial_modes() const;
  ModeVector target_modes() const;
  HistorySegment history_segment() const;
  /// M = ||x_T|| + ||phi(0)|| + ||gamma||_L1 + sum d_k (C = 1).
  double control_bound_constant() const;
};

/// Time-sampled selection on the grid times, in mode coordinates.
using ForcingSamples = std::vector<ModeVector>;

/// Produces f(t_j), given the trajectory computed through node j-1.
using ForcingProvider = std::function<ModeVector(int node, const PiecewiseTrajectory& partial)>;
/// Produces the jump I_k, given impulse index k and the left value x(tau_k).
using JumpProvider = std::function<ModeVector(int k, const ModeVector& left)>;

class MildSolver {
 public:
  explicit MildSolver(const SteeringProblem& problem);

  const SteeringProblem& problem() const noexcept { return problem_; }

  /// One pass of the stepping recursion
  /// x_{j+1} = U(t_{j+1},t_j) x_j^+ + Simpson_j[U(t_{j+1},s)(B u(s) + f(s))],
  /// with f linear between grid times.
  PiecewiseTrajectory propagate(const ModeVector& x0, const ControlSignal& control,
                                const ForcingProvider& forcing, const JumpProvider& jumps) const;

  /// Mild solution with the selection and jumps taken from the trajectory itself.
  PiecewiseTrajectory integrate_mild(const ControlSignal& control) const;

  /// Mild solution with a frozen selection and jumps I_k(source(tau_k)).
  PiecewiseTrajectory integrate_frozen(const ControlSignal& control, const ForcingSamples& forcing,
                                       const PiecewiseTrajectory& jump_source) const;

  /// Selection f in N_F(x) at the grid times.
  ForcingSamples selection(const PiecewiseTrajectory& x) const;

  /// g(x) = x_T - U(T,0) phi(0) - int U(T,s) f(s) ds - sum U(T,tau_k) I_k(x(tau_k)).
  ModeVector terminal_defect(const PiecewiseTrajectory& x, const ForcingSamples& forcing) const;

  /// sup over nodes (left and right values) of ||a - b||_p.
  double pc_distance(const PiecewiseTrajectory& a, const PiecewiseTrajectory& b) const;
  double pc_norm(const PiecewiseTrajectory& a) const;

 private:
  ModeVector jump_from(int k, const ModeVector& left) const;

  const SteeringProblem& problem_;
  std::vector<Eigen::VectorXd> step_multipliers_;
  std::vector<Eigen::VectorXd> half_multipliers_;
  std::vector<int> impulse_at_node_;
};

/// u_lambda for a trajectory: computes g(x) and applies the feedback law.
FeedbackLaw feedback_control(double lambda, const GramianMatrix& psi, const MildSolver& solver,
                             const PiecewiseTrajectory& x,
                             const ResolventOptions& options = {});

struct GammaOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
  double relaxation = 1.0;
  ResolventOptions resolvent;
};

struct IterationRecord {
  int iteration = 0;
  double increment = 0.0;
  double relaxation = 1.0;
  int resolvent_iterations = 0;
  double resolvent_residual = 0.0;
};

struct SolveReport {
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;
  int corrections = 0;
  double final_increment = 0.0;
  double terminal_error = 0.0;
  double control_l2 = 0.0;
  double control_sup = 0.0;
  double cost = 0.0;
  double terminal_identity_residual = 0.0;
  double terminal_identity_limit = 0.0;
  double control_bound = 0.0;    ///< M sqrt(5) |gain| / lambda
  double orbit_sup = 0.0;
  double orbit_bound = 0.0;
  double growth_bound_min_margin = 0.0;
  int growth_bound_samples = 0;
  bool growth_bound_holds = true;
  std::vector<IterationRecord> history;

  double control_bound_margin() const { return control_bound - control_sup; }
  bool control_bound_holds() const { return control_sup <= control_bound * (1.0 + 1e-12); }
  bool orbit_bound_holds() const { return orbit_sup <= orbit_bound * (1.0 + 1e-12); }
  bool terminal_identity_holds() const { return terminal_identity_residual <= terminal_identity_limit; }
  bool self_checks_hold() const {
    return terminal_identity_holds() && control_bound_holds() && orbit_bound_holds() && growth_bound_holds;
  }
};

struct SteeringResult {
  PiecewiseTrajectory trajectory;
  ControlSignal control;
  SolveReport report;
};

/// Fixed-point iteration x -> Gamma_lambda(x). Non-convergence is reported, not thrown.
SteeringResult gamma_iteration(double lambda, const GramianMatrix& psi, const MildSolver& solver,
                               const GammaOptions& options = {});

}  // namespace evosteer
