// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "evosteer/config.hpp"
#include "evosteer/experiments.hpp"

using namespace evosteer;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_path(const std::string& name) { return std::string(EVOSTEER_CONFIG_DIR) + "/" + name; }

Eigen::VectorXd gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

Outcome evolution_laws() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  double cocycle = 0.0, adjoint = 0.0;
  bool identity = true;
  for (const CoefficientSpec& a : {CoefficientSpec::constant(1.0), CoefficientSpec::affine(1.0, 0.5)}) {
    const EvolutionFamily U(a, 1.0, 32);
    for (int k = 0; k < 1000; ++k) {
      double s = time(rng), r = time(rng), t = time(rng);
      if (s > r) std::swap(s, r);
      if (r > t) std::swap(r, t);
      if (s > r) std::swap(s, r);
      const ModeVector f(gaussian(rng, 32));
      const ModeVector g(gaussian(rng, 32));
      const ModeVector direct = U.apply(t, s, f);
      cocycle = std::max(cocycle, (U.apply(t, r, U.apply(r, s, f)).coeffs - direct.coeffs).norm() / f.coeffs.norm());
      const double lhs = direct.coeffs.dot(g.coeffs);
      const double rhs = f.coeffs.dot(U.apply_adjoint(t, s, g).coeffs);
      adjoint = std::max(adjoint, std::abs(lhs - rhs) / (f.coeffs.norm() * g.coeffs.norm()));
      identity = identity && (U.apply(s, s, f).coeffs.array() == f.coeffs.array()).all();
    }
  }
  const double elapsed = seconds_since(t0);
  return {cocycle <= 1e-10 && adjoint <= 1e-10 && identity && elapsed < 5.0,
          "cocycle " + fmt(cocycle) + ", adjoint " + fmt(adjoint) + ", identity " +
              (identity ? "exact" : "inexact") + ", " + fmt(elapsed) + " s"};
}

Outcome duality_identities() {
  std::mt19937_64 rng(2);
  const GridPtr grid = SpatialGrid::make(257);
  double pair_err = 0.0, norm_err = 0.0;
  bool exact = true;
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (int k = 0; k < 1000; ++k) {
      const StateVector x(grid, gaussian(rng, grid->points()), p);
      const DualVector j = duality_map(x);
      const double n = lp_norm(x);
      pair_err = std::max(pair_err, std::abs(pairing(x, j) - n * n) / (n * n));
      norm_err = std::max(norm_err, std::abs(dual_norm(j) - n) / n);
      if (p == 2.0) exact = exact && (j.values().array() == x.values().array()).all();
    }
  }
  return {pair_err <= 1e-9 && norm_err <= 1e-9 && exact,
          "pairing " + fmt(pair_err) + ", dual norm " + fmt(norm_err) + ", p=2 " + (exact ? "exact" : "inexact")};
}

Outcome gramian_oracle() {
  const GramianMatrix psi = gramian(1.0, CoefficientSpec::constant(1.0), 8, 20000);
  const auto& P = psi.values;
  double err = 0.0;
  err = std::max(err, std::abs(P(0, 0) - 2.0 * (1.0 - std::exp(-2.0))));
  err = std::max(err, std::abs(P(0, 1) - 2.0 * (1.0 - std::exp(-5.0)) / 5.0));
  err = std::max(err, std::abs(P(1, 1) - (1.0 - std::exp(-8.0)) / 8.0));
  for (int n = 3; n <= 8; ++n) {
    err = std::max(err, std::abs(P(n - 1, n - 1) - (1.0 - std::exp(-2.0 * n * n)) / (2.0 * n * n)));
  }
  const double sym = psi.symmetry_defect();
  const double eig = psi.min_eigenvalue();
  return {err <= 1e-8 && sym <= 1e-12 && eig >= -1e-12,
          "entry error " + fmt(err) + ", symmetry " + fmt(sym) + ", min eigenvalue " + fmt(eig)};
}

Outcome resolvent_bound() {
  std::mt19937_64 rng(4);
  const int N = 8;
  const GramianMatrix psi = gramian(1.0, CoefficientSpec::constant(1.0), N, 1000);
  const SineBasis basis(SpatialGrid::make(129), N);
  double excess = -1.0, gap = 0.0;
  for (double p : {1.5, 2.0, 3.0}) {
    for (int e = 0; e < 10; ++e) {
      const double lambda = std::pow(10.0, -6.0 + e);
      for (int k = 0; k < 5; ++k) {
        const ModeVector h(gaussian(rng, N));
        const ResolventResult z = resolvent_solve(lambda, psi, h, p, basis);
        excess = std::max(excess, basis.state_norm(z.z, p) / basis.state_norm(h, p) - 1.0);
        if (p == 2.0) {
          ResolventOptions newton;
          newton.force_newton = true;
          newton.linear_initial_guess = false;
          const ResolventResult zn = resolvent_solve(lambda, psi, h, p, basis, newton);
          gap = std::max(gap, (zn.z.coeffs - z.z.coeffs).norm() / std::max(1e-300, z.z.coeffs.norm()));
        }
      }
    }
  }
  return {excess <= 1e-9 && gap <= 1e-10,
          "max ||z||/||h|| - 1 = " + fmt(excess) + ", Newton vs direct " + fmt(gap)};
}

struct Runs {
  std::vector<PiecewiseTrajectory> trajectories;
  std::vector<SolveReport> reports;
  std::vector<bool> nonlinear;
};

Runs& produced_runs() {
  static Runs runs = [] {
    Runs r;
    for (const char* name : {"linear_e3.cfg", "default.cfg", "impulsive.cfg"}) {
      const RunConfig c = load_config(config_path(name));
      for (double lambda : c.lambdas) {
        SteeringResult s = run_steer(c, lambda);
        r.trajectories.push_back(std::move(s.trajectory));
        r.reports.push_back(s.report);
        r.nonlinear.push_back(!c.linear_case());
      }
    }
    return r;
  }();
  return runs;
}

Outcome linear_steering_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = load_config(config_path("linear_e3.cfg"));
  const SweepResult sweep = run_sweep(c);
  const double elapsed = seconds_since(t0);
  const double psi33 = -std::expm1(-18.0) / 18.0;
  double err = 0.0;
  bool decreasing = true;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const double lambda = sweep.rows[i].lambda;
    const double expected = lambda / (lambda + psi33);
    err = std::max(err, std::abs(sweep.rows[i].terminal_error - expected) / expected);
    if (i > 0 && !(sweep.rows[i].terminal_error < sweep.rows[i - 1].terminal_error)) decreasing = false;
  }
  return {err <= 1e-6 && decreasing && sweep.rows.size() == 5 && elapsed < 10.0,
          "max relative gap " + fmt(err) + (decreasing ? ", strictly decreasing, " : ", NOT decreasing, ") +
              fmt(elapsed) + " s"};
}

Outcome terminal_identity() {
  const Runs& runs = produced_runs();
  int checked = 0;
  double worst = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < runs.reports.size(); ++i) {
    const SolveReport& r = runs.reports[i];
    if (!runs.nonlinear[i] || !r.converged) continue;
    ++checked;
    worst = std::max(worst, r.terminal_identity_residual / r.terminal_identity_limit);
    ok = ok && r.terminal_identity_holds();
  }
  return {ok && checked > 0,
          std::to_string(checked) + " converged nonlinear runs, worst residual/limit " + fmt(worst)};
}

Outcome control_bound() {
  const Runs& runs = produced_runs();
  double margin = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (const SolveReport& r : runs.reports) {
    margin = std::min(margin, r.control_bound_margin() / r.control_bound);
    ok = ok && r.control_bound_holds();
  }
  return {ok, std::to_string(runs.reports.size()) + " controls, min relative margin " + fmt(margin)};
}

Outcome growth_bound() {
  const Runs& runs = produced_runs();
  bool ok = true;
  int impulsive = 0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < runs.reports.size(); ++i) {
    const SolveReport& r = runs.reports[i];
    ok = ok && r.growth_bound_holds && r.growth_bound_samples == 100;
    margin = std::min(margin, r.growth_bound_min_margin);
    if (!runs.trajectories[i].impulse_nodes.empty()) ++impulsive;
  }
  return {ok && impulsive > 0, std::to_string(runs.reports.size()) + " trajectories (" + std::to_string(impulsive) +
                                   " impulsive) x 100 times, min margin " + fmt(margin)};
}

Outcome unique_continuation() {
  const EvolutionFamily U(CoefficientSpec::constant(1.0), 1.0, 8);
  const auto on = unique_continuation_check(U, InputOperator(8, 1.0), 64);
  const auto off = unique_continuation_check(U, InputOperator(8, 0.0), 64);
  return {on.passes && on.smallest_singular_value > 0.0 && !off.passes,
          "sigma_min " + fmt(on.smallest_singular_value) + ", with B = 0 sigma_min " +
              fmt(off.smallest_singular_value) + (off.passes ? " (passes, wrong)" : " (fails)")};
}

Outcome solver_order() {
  // Homogeneous decay from phi = w_1 under a(t) = 1 + 0.5 t.
  RunConfig decay = parse_config(
      "schema = evosteer/1\n[model]\nmodes = 8\ngrid = 129\nsteps = 200\n"
      "[coefficient]\nkind = affine\nvalue = 1\nslope = 0.5\nholder_const = 0.5\n"
      "[history]\nkind = mode\nmode = 1\namplitude = 1\n",
      "decay");
  const SteeringProblem pr = build_problem(decay);
  const MildSolver solver(pr);
  const PiecewiseTrajectory x = solver.integrate_mild(ControlSignal::zero(pr.grid, 8));
  double decay_err = 0.0;
  for (int j = 0; j < x.nodes(); ++j) {
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(8);
    expected[0] = std::exp(-pr.family.mu(0.0, x.times[j]));
    decay_err = std::max(decay_err, (x.states[j].coeffs - expected).cwiseAbs().maxCoeff());
  }

  // Forcing beta(t) [1, 1] with beta oscillating in time, refined twice.
  std::vector<Eigen::VectorXd> terminal;
  for (int steps : {100, 200, 400}) {
    const RunConfig forced = parse_config(
        "schema = evosteer/1\n[model]\nmodes = 16\ngrid = 257\nsteps = " + std::to_string(steps) +
            "\n[inclusion]\nenvelope = constant\nlevel = 1\nbeta = 1\nbeta_amplitude = 0.5\n"
            "beta_frequency = 6.283185307179586\n",
        "forced");
    const SteeringProblem fp = build_problem(forced);
    const MildSolver fs(fp);
    terminal.push_back(fs.integrate_mild(ControlSignal::zero(fp.grid, 16)).states.back().coeffs);
  }
  const double ratio = (terminal[0] - terminal[1]).norm() / (terminal[1] - terminal[2]).norm();
  return {decay_err <= 1e-10 && ratio >= 3.5 && ratio <= 4.5,
          "decay error " + fmt(decay_err) + ", step-halving ratio " + fmt(ratio)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const auto base = std::filesystem::temp_directory_path() / ("evosteer_repro_" + std::to_string(::getpid()));
  const RunConfig c = load_config(config_path("impulsive.cfg"));
  std::ostringstream sink;
  std::vector<std::string> files = {"sweep.csv", "trajectory.csv", "control.csv"};
  std::vector<std::string> first, second;
  for (int pass = 0; pass < 2; ++pass) {
    CommandOptions o;
    o.out_dir = (base / std::to_string(pass)).string();
    cmd_sweep(c, o, sink);
    o.lambda = c.lambdas.back();
    cmd_steer(c, o, sink);
    auto& store = pass == 0 ? first : second;
    for (const auto& f : files) store.push_back(slurp(std::filesystem::path(o.out_dir) / f));
  }
  std::filesystem::remove_all(base);
  bool same = true;
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    same = same && !first[i].empty() && first[i] == second[i];
    bytes += first[i].size();
  }
  return {same, std::to_string(files.size()) + " CSVs, " + std::to_string(bytes) + " bytes, " +
                    (same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"evolution-family laws", evolution_laws},
      {"duality-map identities", duality_identities},
      {"Gramian closed forms", gramian_oracle},
      {"resolvent contraction", resolvent_bound},
      {"linear steering law", linear_steering_law},
      {"terminal identity", terminal_identity},
      {"control bound", control_bound},
      {"phase-space growth bound", growth_bound},
      {"unique continuation", unique_continuation},
      {"mild-solver order", solver_order},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << i + 1 << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
