#include "evosteer/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "evosteer/error.hpp"

namespace evosteer {

double KernelFactor::operator()(double xi) const {
  return frequency == 0 ? 1.0 : std::sin(frequency * xi);
}

StateVector Impulse::apply(const StateVector& x) const {
  const SpatialGrid& grid = *x.grid();
  const Eigen::VectorXd& v = x.values();
  double mass = 0.0;
  for (int i = 0; i < grid.points(); ++i) {
    const double c = std::cos(v[i]);
    mass += grid.weights()[i] * response(grid.nodes()[i]) * c * c;
  }
  Eigen::VectorXd out(grid.points());
  for (int i = 0; i < grid.points(); ++i) out[i] = coefficient * source(grid.nodes()[i]) * mass;
  return StateVector(x.grid(), std::move(out), x.p());
}

double Impulse::bound(const SpatialGrid& grid, double p) const {
  Eigen::VectorXd s(grid.points());
  double response_l1 = 0.0;
  for (int i = 0; i < grid.points(); ++i) {
    s[i] = source(grid.nodes()[i]);
    response_l1 += grid.weights()[i] * std::abs(response(grid.nodes()[i]));
  }
  return std::abs(coefficient) * weighted_norm(s, grid.weights(), p) * response_l1;
}

std::vector<int> ImpulseSpec::snap(const TimeGrid& grid) {
  std::vector<int> nodes;
  nodes.reserve(impulses.size());
  for (std::size_t k = 0; k < impulses.size(); ++k) {
    Impulse& imp = impulses[k];
    if (k > 0 && !(imp.time > impulses[k - 1].time)) {
      throw Error(ErrorKind::Configuration, "impulse times must be strictly increasing");
    }
    const int j = grid.nearest(imp.time);
    if (std::abs(grid.time(j) - imp.time) > 0.5 * grid.step() * (1.0 + 1e-9)) {
      throw Error(ErrorKind::Configuration, "impulse time " + std::to_string(imp.time) +
                                                " is off the time grid");
    }
    if (j <= 0 || j >= grid.steps()) {
      throw Error(ErrorKind::Configuration, "impulse times must lie strictly inside (0, T)");
    }
    if (!nodes.empty() && nodes.back() == j) {
      throw Error(ErrorKind::Configuration, "two impulses snap to the same grid time");
    }
    imp.time = grid.time(j);
    nodes.push_back(j);
  }
  return nodes;
}

double ImpulseSpec::bound_sum(const SpatialGrid& grid, double p) const {
  double sum = 0.0;
  for (const auto& imp : impulses) sum += imp.bound(grid, p);
  return sum;
}

StateVector apply_impulse(const ImpulseSpec& spec, int k, const StateVector& x) {
  if (k < 0 || k >= static_cast<int>(spec.impulses.size())) {
    throw Error(ErrorKind::InvalidInput, "impulse index out of range");
  }
  return spec.impulses[k].apply(x);
}

SteeringProblem::SteeringProblem(EvolutionFamily family_, SineBasis basis_, InputOperator input_,
                                 TimeGrid grid_, double p_, StateVector target_)
    : family(std::move(family_)),
      basis(std::move(basis_)),
      input(std::move(input_)),
      grid(grid_),
      p(p_),
      target(std::move(target_)) {
  if (family.modes() != basis.modes() || input.modes() != basis.modes()) {
    throw Error(ErrorKind::Dimension, "mode counts of evolution, basis and input differ");
  }
}

ModeVector SteeringProblem::initial_modes() const {
  return basis.to_modes(history.value_at(0.0, basis.grid(), p));
}

ModeVector SteeringProblem::target_modes() const { return basis.to_modes(target); }

HistorySegment SteeringProblem::history_segment() const {
  return sample_history(history, basis.grid(), p, kernel_rate, history_window, history_spacing);
}

double SteeringProblem::control_bound_constant() const {
  return lp_norm(target) + lp_norm(history.value_at(0.0, basis.grid(), p)) +
         inclusion.gamma_l1(grid.horizon(), p) + impulses.bound_sum(*basis.grid(), p);
}

MildSolver::MildSolver(const SteeringProblem& problem) : problem_(problem) {
  const TimeGrid& grid = problem_.grid;
  step_multipliers_.reserve(grid.steps());
  half_multipliers_.reserve(grid.steps());
  for (int j = 0; j < grid.steps(); ++j) {
    const double a = grid.time(j);
    const double b = grid.time(j + 1);
    step_multipliers_.push_back(problem_.family.multipliers(a, b));
    half_multipliers_.push_back(problem_.family.multipliers(grid.quadrature_time(2 * j + 1), b));
  }
  impulse_at_node_.assign(grid.steps() + 1, -1);
  if (problem_.impulse_nodes.size() != problem_.impulses.impulses.size()) {
    throw Error(ErrorKind::Configuration, "impulses have not been snapped to the grid");
  }
  for (std::size_t k = 0; k < problem_.impulse_nodes.size(); ++k) {
    impulse_at_node_.at(problem_.impulse_nodes[k]) = static_cast<int>(k);
  }
}

PiecewiseTrajectory MildSolver::propagate(const ModeVector& x0, const ControlSignal& control,
                                          const ForcingProvider& forcing,
                                          const JumpProvider& jumps) const {
  const TimeGrid& grid = problem_.grid;
  const InputOperator& input = problem_.input;
  if (static_cast<int>(control.values.size()) != grid.quadrature_nodes()) {
    throw Error(ErrorKind::Dimension, "control is not sampled on the solver grid");
  }
  const int steps = grid.steps();
  const double h = grid.step();
  PiecewiseTrajectory x;
  x.times.reserve(steps + 1);
  x.states.reserve(steps + 1);
  x.right.reserve(steps + 1);
  x.times.push_back(0.0);
  x.states.push_back(x0);
  x.right.push_back(x0);

  Eigen::VectorXd f_prev = forcing(0, x).coeffs;
  for (int j = 0; j < steps; ++j) {
    const Eigen::VectorXd f_next = forcing(j + 1, x).coeffs;
    const Eigen::VectorXd start = input.apply(control.values[2 * j]).coeffs + f_prev;
    const Eigen::VectorXd mid = input.apply(control.values[2 * j + 1]).coeffs + 0.5 * (f_prev + f_next);
    const Eigen::VectorXd end = input.apply(control.values[2 * j + 2]).coeffs + f_next;
    Eigen::VectorXd next = step_multipliers_[j].cwiseProduct(x.right[j].coeffs + (h / 6.0) * start) +
                           (4.0 * h / 6.0) * half_multipliers_[j].cwiseProduct(mid) +
                           (h / 6.0) * end;
    x.times.push_back(grid.time(j + 1));
    x.states.emplace_back(next);
    const int k = impulse_at_node_[j + 1];
    if (k >= 0) {
      x.right.emplace_back(next + jumps(k, x.states.back()).coeffs);
      x.impulse_nodes.push_back(j + 1);
    } else {
      x.right.emplace_back(std::move(next));
    }
    f_prev = f_next;
  }
  return x;
}

ModeVector MildSolver::jump_from(int k, const ModeVector& left) const {
  const StateVector state = problem_.basis.from_modes(left, problem_.p);
  return problem_.basis.to_modes(apply_impulse(problem_.impulses, k, state));
}

PiecewiseTrajectory MildSolver::integrate_mild(const ControlSignal& control) const {
  const SteeringProblem& pr = problem_;
  const int modes = pr.basis.modes();
  const bool inert = pr.inclusion.envelope.kind == EnvelopeKind::Zero;
  const ForcingProvider forcing = [&](int node, const PiecewiseTrajectory& partial) {
    const double t = pr.grid.time(node);
    if (inert || pr.inclusion.weight(t) == 0.0) return ModeVector::zero(modes);
    const double s = t - pr.inclusion.delay;
    StateVector v = pr.history.value_at(std::min(s, 0.0), pr.basis.grid(), pr.p);
    if (s > 0.0) {
      // Delays shorter than the step fall back to the latest computed value.
      const ModeVector c = s >= partial.times.back() ? partial.right.back() : partial.at(s);
      v = pr.basis.from_modes(c, pr.p);
    }
    return pr.basis.to_modes(select(evaluate_F(t, v, pr.inclusion), pr.policy, t, node));
  };
  const JumpProvider jumps = [&](int k, const ModeVector& left) { return jump_from(k, left); };
  return propagate(pr.initial_modes(), control, forcing, jumps);
}

PiecewiseTrajectory MildSolver::integrate_frozen(const ControlSignal& control,
                                                 const ForcingSamples& forcing,
                                                 const PiecewiseTrajectory& jump_source) const {
  if (static_cast<int>(forcing.size()) != problem_.grid.steps() + 1) {
    throw Error(ErrorKind::Dimension, "selection is not sampled on the solver grid");
  }
  const ForcingProvider provider = [&](int node, const PiecewiseTrajectory&) {
    return forcing[node];
  };
  const JumpProvider jumps = [&](int k, const ModeVector&) {
    return jump_from(k, jump_source.states[problem_.impulse_nodes[k]]);
  };
  return propagate(problem_.initial_modes(), control, provider, jumps);
}

ForcingSamples MildSolver::selection(const PiecewiseTrajectory& x) const {
  const SteeringProblem& pr = problem_;
  ForcingSamples out;
  out.reserve(pr.grid.steps() + 1);
  if (pr.inclusion.envelope.kind == EnvelopeKind::Zero) {
    out.assign(pr.grid.steps() + 1, ModeVector::zero(pr.basis.modes()));
    return out;
  }
  const SelectionSamples samples =
      nemytskii(x, pr.basis, pr.history, pr.p, pr.inclusion, pr.policy, pr.grid.times());
  for (const auto& field : samples.fields) out.push_back(pr.basis.to_modes(field));
  return out;
}

ModeVector MildSolver::terminal_defect(const PiecewiseTrajectory& x,
                                       const ForcingSamples& forcing) const {
  const ControlSignal none = ControlSignal::zero(problem_.grid, problem_.basis.modes());
  const PiecewiseTrajectory free = integrate_frozen(none, forcing, x);
  return ModeVector(problem_.target_modes().coeffs - free.states.back().coeffs);
}

double MildSolver::pc_distance(const PiecewiseTrajectory& a, const PiecewiseTrajectory& b) const {
  if (a.nodes() != b.nodes()) throw Error(ErrorKind::Dimension, "trajectory grids differ");
  const double p = problem_.p;
  double d = 0.0;
  for (int j = 0; j < a.nodes(); ++j) {
    d = std::max(d, problem_.basis.state_norm(ModeVector(a.states[j].coeffs - b.states[j].coeffs), p));
  }
  for (int j : a.impulse_nodes) {
    d = std::max(d, problem_.basis.state_norm(ModeVector(a.right[j].coeffs - b.right[j].coeffs), p));
  }
  return d;
}

double MildSolver::pc_norm(const PiecewiseTrajectory& a) const {
  double d = 0.0;
  for (int j = 0; j < a.nodes(); ++j) d = std::max(d, problem_.basis.state_norm(a.states[j], problem_.p));
  for (int j : a.impulse_nodes) d = std::max(d, problem_.basis.state_norm(a.right[j], problem_.p));
  return d;
}

FeedbackLaw feedback_control(double lambda, const GramianMatrix& psi, const MildSolver& solver,
                             const PiecewiseTrajectory& x, const ResolventOptions& options) {
  const SteeringProblem& pr = solver.problem();
  const ModeVector g = solver.terminal_defect(x, solver.selection(x));
  return feedback_control(lambda, psi, pr.family, pr.input, pr.basis, pr.grid, g, pr.p, options);
}

SteeringResult gamma_iteration(double lambda, const GramianMatrix& psi, const MildSolver& solver,
                               const GammaOptions& options) {
  if (!(options.tolerance > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidInput, "lambda must be positive");
  const SteeringProblem& pr = solver.problem();
  const int modes = pr.basis.modes();

  SteeringResult result{solver.integrate_mild(ControlSignal::zero(pr.grid, modes)),
                        ControlSignal::zero(pr.grid, modes), {}};
  SolveReport& report = result.report;
  report.lambda = lambda;

  PiecewiseTrajectory x = result.trajectory;
  double omega = options.relaxation;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    const ForcingSamples f = solver.selection(x);
    const ModeVector g = solver.terminal_defect(x, f);
    FeedbackLaw law = feedback_control(lambda, psi, pr.family, pr.input, pr.basis, pr.grid, g,
                                       pr.p, options.resolvent);
    PiecewiseTrajectory z = solver.integrate_frozen(law.control, f, x);
    const double increment = solver.pc_distance(z, x);
    if (it > 1 && omega == 1.0 && increment > previous) omega = 0.5;  // oscillating
    report.history.push_back(
        {it, increment, omega, law.resolvent.iterations, law.resolvent.residual});
    report.iterations = it;
    report.final_increment = increment;
    result.control = std::move(law.control);
    if (increment <= options.tolerance) {
      report.converged = true;
      x = std::move(z);
      break;
    }
    ++report.corrections;
    if (omega == 1.0) {
      x = std::move(z);
    } else {
      for (int j = 0; j < x.nodes(); ++j) {
        x.states[j].coeffs += omega * (z.states[j].coeffs - x.states[j].coeffs);
        x.right[j].coeffs += omega * (z.right[j].coeffs - x.right[j].coeffs);
      }
    }
    previous = increment;
  }
  result.trajectory = std::move(x);
  const PiecewiseTrajectory& traj = result.trajectory;

  // Self-checks on the returned pair.
  const ModeVector target = pr.target_modes();
  const ModeVector g = solver.terminal_defect(traj, solver.selection(traj));
  const ResolventResult z = resolvent_solve(lambda, psi, g, pr.p, pr.basis, options.resolvent);
  const Eigen::VectorXd identity = traj.states.back().coeffs - target.coeffs + z.z.coeffs;
  report.terminal_identity_residual = pr.basis.state_norm(ModeVector(identity), pr.p);
  report.terminal_identity_limit = 10.0 * options.tolerance;

  const StateVector terminal = pr.basis.from_modes(traj.states.back(), pr.p);
  report.terminal_error = weighted_norm(terminal.values() - pr.target.values(),
                                        pr.basis.grid()->weights(), pr.p);
  report.control_l2 = result.control.l2_norm();
  report.control_sup = result.control.sup_norm();
  report.cost = report.terminal_error * report.terminal_error + lambda * result.control.energy();
  report.control_bound = pr.control_bound_constant() * pr.input.norm_bound() / lambda;

  const double horizon = pr.grid.horizon();
  report.orbit_sup = solver.pc_norm(traj);
  report.orbit_bound = lp_norm(pr.history.value_at(0.0, pr.basis.grid(), pr.p)) +
                       pr.input.norm_bound() * report.control_l2 * std::sqrt(horizon) +
                       pr.inclusion.gamma_l1(horizon, pr.p) +
                       pr.impulses.bound_sum(*pr.basis.grid(), pr.p);

  const HistorySegment phi = pr.history_segment();
  const GrowthBoundChecker checker(traj, pr.basis, phi);
  constexpr int kGrowthSamples = 100;
  report.growth_bound_samples = kGrowthSamples;
  report.growth_bound_min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrowthSamples; ++i) {
    const GrowthBoundReport b = checker.check(horizon * i / (kGrowthSamples - 1));
    report.growth_bound_min_margin = std::min(report.growth_bound_min_margin, b.rhs - b.lhs);
    report.growth_bound_holds = report.growth_bound_holds && b.holds;
  }
  return result;
}

}  // namespace evosteer
