#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evosteer/config.hpp"
#include "evosteer/mild_solver.hpp"
#include "test_helpers.hpp"

using namespace evosteer;
using doctest::Approx;

namespace {

RunConfig small(const std::string& extra, int steps = 400) {
  return parse_config("schema = evosteer/1\n[model]\nmodes = 8\ngrid = 129\nsteps = " + std::to_string(steps) +
                          "\n" + extra,
                      "test");
}

}  // namespace

TEST_CASE("impulse examples") {
  const GridPtr grid = SpatialGrid::make(257);
  const Impulse imp{0.5, 1.0 / std::numbers::pi, KernelFactor{1}, KernelFactor{1}};
  const StateVector jump = imp.apply(StateVector::zero(grid, 2.0));
  for (int i = 0; i < grid->points(); i += 16) {
    CHECK(jump.values()[i] == Approx(0.6366198 * std::sin(grid->nodes()[i])).epsilon(1e-5));
  }
  const Impulse off{0.5, 0.0, KernelFactor{1}, KernelFactor{1}};
  CHECK(off.apply(StateVector::constant(grid, 3.0, 2.0)).values().cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(2);
  const Impulse general{0.5, -0.7, KernelFactor{2}, KernelFactor{0}};
  for (int k = 0; k < 20; ++k) {
    const StateVector x(grid, random_vector(rng, 257, 4.0), 3.0);
    const StateVector shifted(grid, x.values().array() + 6.0 * std::numbers::pi, 3.0);
    CHECK((general.apply(x).values() - general.apply(shifted).values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(lp_norm(general.apply(x)) <= general.bound(*grid, 3.0) * (1 + 1e-12));
    // Small perturbations move the jump continuously.
    const StateVector near(grid, x.values().array() + 1e-7, 3.0);
    CHECK(lp_norm(StateVector(grid, general.apply(near).values() - general.apply(x).values(), 3.0)) < 1e-5);
  }
}

TEST_CASE("impulse snapping") {
  const TimeGrid grid(1.0, 10);
  ImpulseSpec ok{{{0.31, 1.0, {1}, {1}}, {0.7, 1.0, {1}, {1}}}};
  CHECK(ok.snap(grid) == std::vector<int>{3, 7});
  CHECK(ok.impulses[0].time == Approx(0.3));
  ImpulseSpec edge{{{0.02, 1.0, {1}, {1}}}};
  CHECK_ERROR_KIND(edge.snap(grid), ErrorKind::Configuration);
  ImpulseSpec collide{{{0.30, 1.0, {1}, {1}}, {0.32, 1.0, {1}, {1}}}};
  CHECK_ERROR_KIND(collide.snap(grid), ErrorKind::Configuration);
  ImpulseSpec order{{{0.5, 1.0, {1}, {1}}, {0.3, 1.0, {1}, {1}}}};
  CHECK_ERROR_KIND(order.snap(grid), ErrorKind::Configuration);
}

TEST_CASE("homogeneous decay") {
  const SteeringProblem pr = build_problem(small("[history]\nkind = mode\nmode = 1\namplitude = 1\n"));
  const MildSolver solver(pr);
  const PiecewiseTrajectory x = solver.integrate_mild(ControlSignal::zero(pr.grid, 8));
  CHECK(x.states.back().coeffs[0] == Approx(0.3678794).epsilon(1e-7));
  for (int j = 0; j < x.nodes(); j += 50) {
    CHECK(std::abs(x.states[j].coeffs[0] - std::exp(-x.times[j])) < 1e-14);
    CHECK(x.states[j].coeffs.tail(7).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("single impulse from rest") {
  const SteeringProblem pr =
      build_problem(small("[impulses]\ntimes = 0.5\ncoefficients = 0.3183098861837907\nsources = 1\nresponses = 1\n"));
  const MildSolver solver(pr);
  const PiecewiseTrajectory x = solver.integrate_mild(ControlSignal::zero(pr.grid, 8));
  const int k = pr.impulse_nodes.at(0);
  CHECK(k == 200);
  for (int j = 0; j <= k; ++j) CHECK(x.states[j].coeffs.cwiseAbs().maxCoeff() == 0.0);
  const StateVector jump = apply_impulse(pr.impulses, 0, StateVector::zero(pr.basis.grid(), 2.0));
  const ModeVector j0 = pr.basis.to_modes(jump);
  CHECK((x.right[k].coeffs - j0.coeffs).cwiseAbs().maxCoeff() == 0.0);
  for (int j = k + 1; j < x.nodes(); j += 37) {
    const ModeVector expected = pr.family.apply(x.times[j], x.times[k], j0);
    CHECK((x.states[j].coeffs - expected.coeffs).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(x.at(0.5).coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK((x.right_at(0.5).coeffs - j0.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recursion matches the global mild formula") {
  // Constant forcing, analytic control, one impulse; a = 1 so every term has a closed form.
  const SteeringProblem pr = build_problem(parse_config(
      "schema = evosteer/1\n[model]\nmodes = 8\ngrid = 129\nsteps = 1000\n"
      "[history]\nkind = mode\nmode = 2\namplitude = 0.5\n"
      "[inclusion]\nenvelope = constant\nlevel = 0.4\nbeta = 1\n"
      "[impulses]\ntimes = 0.6\ncoefficients = 0.2\nsources = 3\nresponses = 1\n",
      "global"));
  const MildSolver solver(pr);
  const ModeVector dual(Eigen::VectorXd::LinSpaced(8, 1.0, -1.0));
  const ControlSignal u = control_from_dual(pr.family, pr.input, pr.grid, dual);
  const PiecewiseTrajectory x = solver.integrate_mild(u);

  const Eigen::MatrixXd BBt = pr.input.matrix() * pr.input.matrix().transpose();
  Eigen::MatrixXd psi(8, 8);
  for (int i = 1; i <= 8; ++i) {
    for (int j = 1; j <= 8; ++j) psi(i - 1, j - 1) = BBt(i - 1, j - 1) * -std::expm1(-(i * i + j * j)) / (i * i + j * j);
  }
  const ModeVector f = pr.basis.to_modes(StateVector::constant(pr.basis.grid(), 0.4, 2.0));
  Eigen::VectorXd expected = pr.family.apply(1.0, 0.0, pr.initial_modes()).coeffs + psi * dual.coeffs;
  for (int n = 1; n <= 8; ++n) expected[n - 1] += f.coeffs[n - 1] * -std::expm1(-n * n) / (n * n);
  const int k = pr.impulse_nodes[0];
  const ModeVector jump = pr.basis.to_modes(apply_impulse(pr.impulses, 0, pr.basis.from_modes(x.states[k], 2.0)));
  expected += pr.family.apply(1.0, x.times[k], jump).coeffs;
  CHECK((x.states.back().coeffs - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("step refinement is second order under time-varying forcing") {
  std::vector<Eigen::VectorXd> ends;
  for (int steps : {50, 100, 200, 400}) {
    const SteeringProblem pr = build_problem(parse_config(
        "schema = evosteer/1\n[model]\nmodes = 8\ngrid = 129\nsteps = " + std::to_string(steps) +
            "\n[inclusion]\nenvelope = constant\nlevel = 1\nbeta = 1\nbeta_amplitude = 0.8\nbeta_frequency = 4\n",
        "order"));
    const MildSolver solver(pr);
    ends.push_back(solver.integrate_mild(ControlSignal::zero(pr.grid, 8)).states.back().coeffs);
  }
  for (int i = 0; i + 2 < 4; ++i) {
    const double ratio = (ends[i] - ends[i + 1]).norm() / (ends[i + 1] - ends[i + 2]).norm();
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
}

TEST_CASE("Gamma iteration, linear case") {
  const SteeringProblem pr = build_problem(small("[target]\nmodes = 3:1\n", 1000));
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  for (double lambda : {0.1, 0.01}) {
    const SteeringResult r = gamma_iteration(lambda, psi, solver);
    CHECK(r.report.converged);
    CHECK(r.report.corrections == 1);
    CHECK(r.report.terminal_error == Approx(lambda / (lambda + psi.values(2, 2))).epsilon(1e-12));
    CHECK(r.report.terminal_identity_holds());
    CHECK(r.report.control_bound_holds());
    CHECK(r.report.orbit_bound_holds());
    CHECK(r.report.growth_bound_holds);
    CHECK(r.report.cost == Approx(r.report.terminal_error * r.report.terminal_error +
                                  lambda * r.control.energy()));
  }
}

TEST_CASE("Gamma iteration, reachable target needs no control") {
  const SteeringProblem pr = build_problem(
      small("[history]\nkind = mode\nmode = 1\namplitude = 1\n[target]\nmodes = 1:0.36787944117144233\n"));
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const SteeringResult r = gamma_iteration(0.01, psi, MildSolver(pr));
  CHECK(r.report.converged);
  CHECK(r.report.corrections == 0);
  CHECK(r.control.sup_norm() < 1e-12);
  CHECK(r.report.terminal_error < 1e-12);
}

TEST_CASE("Gamma iteration, tanh field with one impulse") {
  const SteeringProblem pr = build_problem(small(
      "[history]\nkind = mode\namplitude = 1\n[inclusion]\nenvelope = tanh\nwidth = 0.1\nbeta = 0.3\n"
      "[impulses]\ntimes = 0.5\ncoefficients = 0.5\n[target]\nmodes = 3:1\n", 500));
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  const SteeringResult r = gamma_iteration(0.1, psi, solver);
  CHECK(r.report.converged);
  CHECK(r.report.final_increment <= 1e-8);
  CHECK(r.report.terminal_identity_residual <= 1e-7);
  CHECK(r.report.self_checks_hold());
  CHECK(r.trajectory.impulse_nodes == std::vector<int>{250});
  // Recorded jump is I of the previous iterate, within the fixed-point tolerance.
  const int k = r.trajectory.impulse_nodes[0];
  const ModeVector jump = pr.basis.to_modes(
      apply_impulse(pr.impulses, 0, pr.basis.from_modes(r.trajectory.states[k], pr.p)));
  CHECK((r.trajectory.right[k].coeffs - r.trajectory.states[k].coeffs - jump.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  for (std::size_t i = 1; i < r.report.history.size(); ++i) {
    CHECK(r.report.history[i].increment <= r.report.history[i - 1].increment);
  }
}

TEST_CASE("Gamma iteration reports non-convergence") {
  const SteeringProblem pr = build_problem(small(
      "[history]\nkind = mode\namplitude = 2\n[inclusion]\nenvelope = tanh\nwidth = 0.2\nbeta = 2\n"
      "[target]\nmodes = 3:1\n"));
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  GammaOptions opts;
  opts.max_iterations = 2;
  const SteeringResult r = gamma_iteration(1e-3, psi, MildSolver(pr), opts);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.iterations == 2);
  CHECK(r.report.final_increment > opts.tolerance);
  CHECK_ERROR_KIND(gamma_iteration(-1.0, psi, MildSolver(pr)), ErrorKind::InvalidInput);
}

TEST_CASE("PC distance needs matching grids") {
  const SteeringProblem pr = build_problem(small(""));
  const SteeringProblem other = build_problem(small("", 100));
  const MildSolver solver(pr);
  const PiecewiseTrajectory a = solver.integrate_mild(ControlSignal::zero(pr.grid, 8));
  const PiecewiseTrajectory b = MildSolver(other).integrate_mild(ControlSignal::zero(other.grid, 8));
  CHECK(solver.pc_distance(a, a) == 0.0);
  CHECK_ERROR_KIND(solver.pc_distance(a, b), ErrorKind::Dimension);
  CHECK_ERROR_KIND(solver.integrate_mild(ControlSignal::zero(other.grid, 8)), ErrorKind::Dimension);
}
