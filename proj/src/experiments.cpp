#include "evosteer/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

using nlohmann::json;

constexpr const char* kCheckSchema = "evosteer.check/1";
constexpr const char* kGramianSchema = "evosteer.gramian/1";
constexpr const char* kReportSchema = "evosteer.report/1";
constexpr const char* kSweepSchema = "evosteer.sweep/1";

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::string name) { suite_.name = std::move(name); }

  // Records value <= limit.
  void at_most(const std::string& name, double value, double limit) {
    suite_.metrics.push_back({name, value, limit});
    if (!(value <= limit)) suite_.passed = false;
  }
  void at_least(const std::string& name, double value, double limit) {
    suite_.metrics.push_back({name, value, limit});
    if (!(value >= limit)) suite_.passed = false;
  }
  void note(std::string text) { suite_.note = std::move(text); }
  SuiteResult done() { return std::move(suite_); }

 private:
  SuiteResult suite_;
};

Eigen::VectorXd gaussian(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

SuiteResult duality_suite(const RunConfig& c, const GridPtr& grid, std::mt19937_64& rng) {
  SuiteBuilder s("duality");
  std::vector<double> exponents = {1.5, 2.0, 3.0, 4.0};
  if (std::find(exponents.begin(), exponents.end(), c.p) == exponents.end()) exponents.push_back(c.p);
  double pairing_err = 0.0;
  double norm_err = 0.0;
  double identity_err = 0.0;
  for (double p : exponents) {
    for (int k = 0; k < 200; ++k) {
      const StateVector x(grid, gaussian(rng, grid->points()), p);
      const DualVector jx = duality_map(x);
      const double nx = lp_norm(x);
      pairing_err = std::max(pairing_err, std::abs(pairing(x, jx) - nx * nx) / (nx * nx));
      norm_err = std::max(norm_err, std::abs(dual_norm(jx) - nx) / nx);
      if (p == 2.0) identity_err = std::max(identity_err, (jx.values() - x.values()).cwiseAbs().maxCoeff());
    }
  }
  s.at_most("pairing_rel_error", pairing_err, 1e-9);
  s.at_most("dual_norm_rel_error", norm_err, 1e-9);
  s.at_most("p2_identity_error", identity_err, 0.0);
  return s.done();
}

SuiteResult transform_suite(const RunConfig& c, const SineBasis& basis, std::mt19937_64& rng) {
  SuiteBuilder s("transforms");
  double err = 0.0;
  for (int k = 0; k < 50; ++k) {
    const ModeVector m(gaussian(rng, basis.modes()));
    const ModeVector back = basis.to_modes(basis.from_modes(m, c.p));
    err = std::max(err, (back.coeffs - m.coeffs).cwiseAbs().maxCoeff() / std::max(1.0, m.coeffs.cwiseAbs().maxCoeff()));
  }
  s.at_most("round_trip_error", err, c.quadrature_tol);
  return s.done();
}

SuiteResult evolution_suite(const RunConfig& c, const EvolutionFamily& family, std::mt19937_64& rng) {
  SuiteBuilder s("evolution");
  std::uniform_real_distribution<double> time(0.0, c.horizon);
  const int n = family.modes();
  double cocycle = 0.0;
  double adjoint = 0.0;
  double identity = 0.0;
  double contraction = 0.0;
  bool compact = true;
  for (int k = 0; k < 300; ++k) {
    std::array<double, 3> t = {time(rng), time(rng), time(rng)};
    std::sort(t.begin(), t.end());
    const ModeVector f(gaussian(rng, n));
    const ModeVector g(gaussian(rng, n));
    const ModeVector two = family.apply(t[2], t[1], family.apply(t[1], t[0], f));
    const ModeVector one = family.apply(t[2], t[0], f);
    cocycle = std::max(cocycle, (two.coeffs - one.coeffs).norm() / f.coeffs.norm());
    const double lhs = one.coeffs.dot(g.coeffs);
    const double rhs = f.coeffs.dot(family.apply_adjoint(t[2], t[0], g).coeffs);
    adjoint = std::max(adjoint, std::abs(lhs - rhs) / (f.coeffs.norm() * g.coeffs.norm()));
    identity = std::max(identity, (family.apply(t[0], t[0], f).coeffs - f.coeffs).cwiseAbs().maxCoeff());
    contraction = std::max(contraction, family.multipliers(t[0], t[2]).maxCoeff() - 1.0);
    if (t[2] > t[0]) compact = compact && family.compactness_profile(t[2], t[0]).compact;
  }
  s.at_most("cocycle_residual", cocycle, 1e-10);
  s.at_most("adjoint_residual", adjoint, 1e-10);
  s.at_most("identity_error", identity, 0.0);
  s.at_most("contraction_excess", contraction, 0.0);
  s.at_least("multiplier_decay", compact ? 1.0 : 0.0, 1.0);
  return s.done();
}

// Removes history and impulses so integrate_frozen realizes L_T.
SteeringProblem bare_problem(const SteeringProblem& pr) {
  SteeringProblem bare = pr;
  bare.history = HistorySpec{};
  bare.impulses = ImpulseSpec{};
  bare.impulse_nodes.clear();
  bare.inclusion.envelope = Envelope{};
  return bare;
}

SuiteResult gramian_suite(const RunConfig& c, const SteeringProblem& pr, const GramianMatrix& psi) {
  SuiteBuilder s("gramian");
  const double scale = std::max(1e-300, psi.values.cwiseAbs().maxCoeff());
  s.at_most("symmetry_defect", psi.symmetry_defect() / scale, 1e-12);
  s.at_least("min_eigenvalue", psi.min_eigenvalue() / scale, -1e-12);

  // Psi e_i against L_T L_T^* e_i through the stepping solver.
  const SteeringProblem bare = bare_problem(pr);
  const MildSolver solver(bare);
  const ForcingSamples zero(bare.grid.steps() + 1, ModeVector::zero(bare.basis.modes()));
  const PiecewiseTrajectory none = solver.integrate_mild(ControlSignal::zero(bare.grid, bare.basis.modes()));
  double factor = 0.0;
  for (int i = 1; i <= std::min(4, bare.basis.modes()); ++i) {
    const ModeVector e = ModeVector::unit(bare.basis.modes(), i);
    const ControlSignal u = control_from_dual(bare.family, bare.input, bare.grid, e);
    const ModeVector x = solver.integrate_frozen(u, zero, none).states.back();
    factor = std::max(factor, (x.coeffs - psi.values.col(i - 1)).norm() / scale);
  }
  s.at_most("factorization_defect", factor, 1e-12);

  if (c.coefficient.kind == CoefficientKind::Constant) {
    const Eigen::MatrixXd b = pr.input.matrix();
    const double a = c.coefficient.base;
    const double h = pr.grid.step();
    double oracle = 0.0;
    int resolved = 0;
    for (int i = 1; i <= pr.basis.modes(); ++i) {
      for (int j = 1; j <= pr.basis.modes(); ++j) {
        const double rate = a * (i * i + j * j);
        if (rate * h > 0.1) continue;
        ++resolved;
        const double exact = b.row(i - 1).dot(b.row(j - 1)) * -std::expm1(-rate * c.horizon) / rate;
        oracle = std::max(oracle, std::abs(psi.values(i - 1, j - 1) - exact) / scale);
      }
    }
    s.at_most("closed_form_defect", oracle, 1e-8);
    s.note("closed form compared on " + std::to_string(resolved) + " resolved entries");
  } else {
    s.note("closed form skipped for a time-dependent coefficient");
  }
  return s.done();
}

SuiteResult resolvent_suite(const RunConfig& c, const SteeringProblem& pr, const GramianMatrix& psi,
                            std::mt19937_64& rng) {
  SuiteBuilder s("resolvent");
  const ResolventOptions options = resolvent_options(c);
  const int n = pr.basis.modes();
  double excess = -std::numeric_limits<double>::infinity();
  double newton_gap = 0.0;
  double null_gap = 0.0;
  GramianMatrix null{Eigen::MatrixXd::Zero(n, n), psi.horizon};
  for (int e = -6; e <= 3; ++e) {
    const double lambda = std::pow(10.0, e);
    for (int k = 0; k < 3; ++k) {
      const ModeVector h(gaussian(rng, n));
      const ResolventResult z = resolvent_solve(lambda, psi, h, c.p, pr.basis, options);
      const double nh = pr.basis.state_norm(h, c.p);
      excess = std::max(excess, pr.basis.state_norm(z.z, c.p) / nh - 1.0);
      const ResolventResult z0 = resolvent_solve(lambda, null, h, c.p, pr.basis, options);
      null_gap = std::max(null_gap, (z0.z.coeffs - h.coeffs).norm() / h.coeffs.norm());
      if (c.p == 2.0) {
        ResolventOptions forced = options;
        forced.force_newton = true;
        forced.linear_initial_guess = false;
        const ResolventResult zn = resolvent_solve(lambda, psi, h, c.p, pr.basis, forced);
        newton_gap = std::max(newton_gap, (zn.z.coeffs - z.z.coeffs).norm() / h.coeffs.norm());
      }
    }
  }
  s.at_most("contraction_excess", excess, 1e-9);
  s.at_most("zero_gramian_gap", null_gap, 1e-12);
  if (c.p == 2.0) s.at_most("newton_vs_direct", newton_gap, 1e-10);
  return s.done();
}

SuiteResult phase_space_suite(const SteeringProblem& pr, const PiecewiseTrajectory& x) {
  SuiteBuilder s("phase_space");
  const HistorySegment phi = pr.history_segment();
  const double a = bg_norm(phi);
  const double b = bg_norm_double_integral(phi);
  s.at_most("bg_norm_route_gap", std::abs(a - b) / std::max(1.0, std::abs(a)), 1e-8);
  const GrowthBoundChecker checker(x, pr.basis, phi);
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const GrowthBoundReport r = checker.check(pr.grid.horizon() * i / 99.0);
    margin = std::min(margin, r.holds ? std::max(0.0, r.rhs - r.lhs) : r.rhs - r.lhs);
  }
  s.at_least("growth_bound_margin", margin, 0.0);
  return s.done();
}

SuiteResult unique_continuation_suite(const RunConfig& c, const SteeringProblem& pr) {
  SuiteBuilder s("unique_continuation");
  const UniqueContinuationReport r = unique_continuation_check(pr.family, pr.input, c.uc_samples, c.uc_floor);
  s.at_least("smallest_singular_value", r.smallest_singular_value, r.floor);
  s.note(r.passes ? "sampling operator has trivial kernel" : "sampling operator is rank deficient");
  return s.done();
}

SuiteResult selection_suite(const SteeringProblem& pr, const PiecewiseTrajectory& x) {
  SuiteBuilder s("selection");
  const std::vector<double> all = pr.grid.times();
  std::vector<double> times;
  for (std::size_t j = 0; j < all.size(); j += std::max<std::size_t>(1, all.size() / 50)) times.push_back(all[j]);
  const SelectionSamples f = nemytskii(x, pr.basis, pr.history, pr.p, pr.inclusion, pr.policy, times);
  double outside = 0.0;
  double mix_outside = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const StateVector v = delayed_state(x, pr.basis, pr.history, pr.p, times[j] - pr.inclusion.delay);
    const IntervalField field = evaluate_F(times[j], v, pr.inclusion);
    const Eigen::ArrayXd lo = field.lo.values().array();
    const Eigen::ArrayXd hi = field.hi.values().array();
    const Eigen::ArrayXd val = f.fields[j].values().array();
    outside = std::max(outside, std::max((lo - val).maxCoeff(), (val - hi).maxCoeff()));
    const Eigen::ArrayXd mix = 0.3 * lo + 0.7 * hi;
    mix_outside = std::max(mix_outside, std::max((lo - mix).maxCoeff(), (mix - hi).maxCoeff()));
  }
  s.at_most("membership_violation", outside, 1e-12);
  s.at_most("convexity_violation", mix_outside, 1e-12);
  return s.done();
}

SuiteResult impulse_suite(const SteeringProblem& pr, std::mt19937_64& rng) {
  SuiteBuilder s("impulses");
  const GridPtr& grid = pr.basis.grid();
  double excess = -std::numeric_limits<double>::infinity();
  double periodic = 0.0;
  for (std::size_t k = 0; k < pr.impulses.impulses.size(); ++k) {
    const double d = pr.impulses.impulses[k].bound(*grid, pr.p);
    for (int i = 0; i < 50; ++i) {
      const StateVector x(grid, gaussian(rng, grid->points(), 3.0), pr.p);
      const StateVector jx = apply_impulse(pr.impulses, static_cast<int>(k), x);
      excess = std::max(excess, lp_norm(jx) - d * (1.0 + 1e-12));
      const StateVector shifted(grid, x.values().array() + 2.0 * M_PI, pr.p);
      const StateVector js = apply_impulse(pr.impulses, static_cast<int>(k), shifted);
      periodic = std::max(periodic, (js.values() - jx.values()).cwiseAbs().maxCoeff());
    }
  }
  if (pr.impulses.impulses.empty()) {
    s.note("no impulses configured");
    excess = 0.0;
  }
  s.at_most("bound_excess", excess, 0.0);
  s.at_most("periodicity_gap", periodic, 1e-12);
  return s.done();
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Configuration, "cannot write " + path.string());
  out << text;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::filesystem::create_directories(p);
  return p;
}

json report_object(const SolveReport& r) {
  json history = json::array();
  for (const auto& h : r.history) {
    history.push_back({{"iteration", h.iteration},
                       {"increment", number(h.increment)},
                       {"relaxation", h.relaxation},
                       {"resolvent_iterations", h.resolvent_iterations},
                       {"resolvent_residual", number(h.resolvent_residual)}});
  }
  return {{"lambda", r.lambda},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"corrections", r.corrections},
          {"final_increment", number(r.final_increment)},
          {"terminal_error", number(r.terminal_error)},
          {"control_l2", number(r.control_l2)},
          {"control_sup", number(r.control_sup)},
          {"cost", number(r.cost)},
          {"terminal_identity",
           {{"residual", number(r.terminal_identity_residual)},
            {"limit", r.terminal_identity_limit},
            {"holds", r.terminal_identity_holds()}}},
          {"control_bound",
           {{"bound", number(r.control_bound)},
            {"sup", number(r.control_sup)},
            {"margin", number(r.control_bound_margin())},
            {"holds", r.control_bound_holds()}}},
          {"orbit",
           {{"sup", number(r.orbit_sup)}, {"bound", number(r.orbit_bound)}, {"holds", r.orbit_bound_holds()}}},
          {"growth_bound",
           {{"samples", r.growth_bound_samples},
            {"min_margin", number(r.growth_bound_min_margin)},
            {"holds", r.growth_bound_holds}}},
          {"history", history}};
}

}  // namespace

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.policy.seed = seed;
}

bool CheckReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

CheckReport run_checks(const RunConfig& c) {
  const SteeringProblem pr = build_problem(c);
  std::mt19937_64 rng(c.seed);
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  const PiecewiseTrajectory free = solver.integrate_mild(ControlSignal::zero(pr.grid, pr.basis.modes()));

  CheckReport report;
  report.suites.push_back(duality_suite(c, pr.basis.grid(), rng));
  report.suites.push_back(transform_suite(c, pr.basis, rng));
  report.suites.push_back(evolution_suite(c, pr.family, rng));
  report.suites.push_back(gramian_suite(c, pr, psi));
  report.suites.push_back(resolvent_suite(c, pr, psi, rng));
  report.suites.push_back(phase_space_suite(pr, free));
  report.suites.push_back(unique_continuation_suite(c, pr));
  report.suites.push_back(selection_suite(pr, free));
  report.suites.push_back(impulse_suite(pr, rng));
  return report;
}

SteeringResult run_steer(const RunConfig& config, double lambda) {
  const SteeringProblem pr = build_problem(config);
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  return gamma_iteration(lambda, psi, solver, gamma_options(config));
}

SweepResult run_sweep(const RunConfig& config) {
  const SteeringProblem pr = build_problem(config);
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  const GammaOptions options = gamma_options(config);

  std::vector<std::future<SolveReport>> jobs;
  jobs.reserve(config.lambdas.size());
  for (double lambda : config.lambdas) {
    jobs.push_back(std::async(std::launch::async, [&, lambda] {
      return gamma_iteration(lambda, psi, solver, options).report;
    }));
  }
  SweepResult sweep;
  for (auto& job : jobs) {
    SolveReport r = job.get();
    sweep.rows.push_back({r.lambda, r.terminal_error, r.control_l2, r.cost, r.iterations, r.converged});
    sweep.reports.push_back(std::move(r));
  }
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    if (sweep.rows[i].terminal_error > sweep.rows[i - 1].terminal_error) sweep.monotone = false;
  }
  return sweep;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string check_json(const CheckReport& report) {
  json suites = json::array();
  for (const auto& s : report.suites) {
    json metrics = json::array();
    for (const auto& m : s.metrics) {
      metrics.push_back({{"name", m.name}, {"value", number(m.value)}, {"limit", number(m.limit)}});
    }
    json entry = {{"name", s.name}, {"passed", s.passed}, {"metrics", metrics}};
    if (!s.note.empty()) entry["note"] = s.note;
    suites.push_back(entry);
  }
  return json{{"schema", kCheckSchema}, {"passed", report.passed()}, {"suites", suites}}.dump(2) + "\n";
}

std::string check_csv(const CheckReport& report) {
  std::string out = csv_row({"suite", "metric", "value", "limit", "passed"});
  for (const auto& s : report.suites) {
    for (const auto& m : s.metrics) {
      out += csv_row({s.name, m.name, format_number(m.value), format_number(m.limit), s.passed ? "1" : "0"});
    }
  }
  return out;
}

std::string gramian_csv(const GramianMatrix& psi) {
  std::vector<std::string> header = {"n"};
  for (int j = 1; j <= psi.values.cols(); ++j) header.push_back("m" + std::to_string(j));
  std::string out = csv_row(header);
  for (int i = 0; i < psi.values.rows(); ++i) {
    std::vector<std::string> row = {std::to_string(i + 1)};
    for (int j = 0; j < psi.values.cols(); ++j) row.push_back(format_number(psi.values(i, j)));
    out += csv_row(row);
  }
  return out;
}

std::string gramian_json(const GramianMatrix& psi) {
  json rows = json::array();
  for (int i = 0; i < psi.values.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < psi.values.cols(); ++j) row.push_back(psi.values(i, j));
    rows.push_back(row);
  }
  return json{{"schema", kGramianSchema},
              {"horizon", psi.horizon},
              {"modes", psi.values.rows()},
              {"symmetry_defect", psi.symmetry_defect()},
              {"min_eigenvalue", psi.min_eigenvalue()},
              {"values", rows}}
             .dump(2) + "\n";
}

std::string trajectory_csv(const PiecewiseTrajectory& x) {
  const int n = x.states.front().size();
  std::vector<std::string> header = {"t", "branch"};
  for (int k = 1; k <= n; ++k) header.push_back("c" + std::to_string(k));
  std::string out = csv_row(header);
  const auto emit = [&](int j, const char* branch, const ModeVector& v) {
    std::vector<std::string> row = {format_number(x.times[j]), branch};
    for (int k = 0; k < n; ++k) row.push_back(format_number(v.coeffs[k]));
    out += csv_row(row);
  };
  for (int j = 0; j < x.nodes(); ++j) {
    emit(j, "left", x.states[j]);
    if (std::find(x.impulse_nodes.begin(), x.impulse_nodes.end(), j) != x.impulse_nodes.end()) {
      emit(j, "right", x.right[j]);
    }
  }
  return out;
}

std::string trajectory_grid_csv(const PiecewiseTrajectory& x, const SineBasis& basis, double p,
                                int stride) {
  const Eigen::VectorXd& xi = basis.grid()->nodes();
  std::string out = csv_row({"t", "xi", "value"});
  for (int j = 0; j < x.nodes(); j += std::max(1, stride)) {
    const StateVector v = basis.from_modes(x.states[j], p);
    for (int i = 0; i < xi.size(); ++i) {
      out += csv_row({format_number(x.times[j]), format_number(xi[i]), format_number(v.values()[i])});
    }
  }
  return out;
}

std::string control_csv(const ControlSignal& u) {
  const int n = static_cast<int>(u.values.front().coeffs.size());
  std::vector<std::string> header = {"t"};
  for (int k = 2; k <= n + 1; ++k) header.push_back("u" + std::to_string(k));
  std::string out = csv_row(header);
  for (int i = 0; i < u.grid.quadrature_nodes(); ++i) {
    std::vector<std::string> row = {format_number(u.grid.quadrature_time(i))};
    for (int k = 0; k < n; ++k) row.push_back(format_number(u.values[i].coeffs[k]));
    out += csv_row(row);
  }
  return out;
}

std::string report_json(const SolveReport& report) {
  json j = report_object(report);
  j["schema"] = kReportSchema;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = csv_row({"lambda", "terminal_error", "control_l2", "cost", "iters", "converged"});
  for (const auto& r : sweep.rows) {
    out += csv_row({format_number(r.lambda), format_number(r.terminal_error), format_number(r.control_l2),
                    format_number(r.cost), std::to_string(r.iterations), r.converged ? "1" : "0"});
  }
  return out;
}

std::string sweep_json(const SweepResult& sweep, bool linear) {
  json rows = json::array();
  for (const auto& r : sweep.reports) rows.push_back(report_object(r));
  return json{{"schema", kSweepSchema},
              {"linear_case", linear},
              {"monotone", sweep.monotone},
              {"rows", rows}}
             .dump(2) + "\n";
}

std::string sweep_svg(const SweepResult& sweep) {
  constexpr double W = 640, H = 420, L = 80, R = 20, T = 20, B = 60;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : sweep.rows) {
    if (r.lambda > 0 && r.terminal_error > 0) pts.emplace_back(std::log10(r.lambda), std::log10(r.terminal_error));
  }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.empty()) {
    s << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no positive errors</text>\n</svg>\n";
    return s.str();
  }
  double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1), y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  s << "<g stroke=\"black\" fill=\"none\">\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n</g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1) {
    s << "<text x=\"" << px(d) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (double d = y0; d <= y1 + 1e-9; d += 1) {
    s << "<text x=\"" << L - 8 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">lambda</text>\n"
    << "<text x=\"20\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (T + H - B) / 2 << ")\">terminal error</text>\n</g>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : pts) s << px(x) << ',' << py(y) << ' ';
  s << "\"/>\n";
  for (const auto& [x, y] : pts) s << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  s << "</svg>\n";
  return s.str();
}

int cmd_check(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const CheckReport report = run_checks(config);
  const std::string text = options.format == OutputFormat::Json ? check_json(report) : check_csv(report);
  out << text;
  if (!options.out_dir.empty()) {
    const auto dir = prepare_dir(options.out_dir);
    write_file(dir / "check.json", check_json(report));
  }
  return report.passed() ? kExitOk : kExitInvariant;
}

int cmd_gramian(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const SteeringProblem pr = build_problem(config);
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const bool json_out = options.format == OutputFormat::Json;
  const std::string text = json_out ? gramian_json(psi) : gramian_csv(psi);
  if (options.out_dir.empty()) {
    out << text;
  } else {
    write_file(prepare_dir(options.out_dir) / (json_out ? "gramian.json" : "gramian.csv"), text);
  }
  const double scale = std::max(1e-300, psi.values.cwiseAbs().maxCoeff());
  const bool ok = psi.symmetry_defect() <= 1e-12 * scale && psi.min_eigenvalue() >= -1e-12 * scale;
  return ok ? kExitOk : kExitInvariant;
}

int cmd_steer(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const double lambda = options.lambda.value_or(config.lambdas.front());
  if (!(lambda > 0.0)) throw Error(ErrorKind::Configuration, "--lambda must be positive");
  const SteeringProblem pr = build_problem(config);
  const GramianMatrix psi = assemble_gramian(pr.family, pr.input, pr.grid);
  const MildSolver solver(pr);
  const SteeringResult result = gamma_iteration(lambda, psi, solver, gamma_options(config));

  const auto dir = prepare_dir(options.out_dir);
  write_file(dir / "trajectory.csv", trajectory_csv(result.trajectory));
  write_file(dir / "control.csv", control_csv(result.control));
  write_file(dir / "report.json", report_json(result.report));
  if (options.snapshot_stride > 0) {
    write_file(dir / "trajectory_grid.csv",
               trajectory_grid_csv(result.trajectory, pr.basis, pr.p, options.snapshot_stride));
  }
  if (options.format == OutputFormat::Json) {
    out << report_json(result.report);
  } else {
    SweepResult single;
    const SolveReport& r = result.report;
    single.rows.push_back({r.lambda, r.terminal_error, r.control_l2, r.cost, r.iterations, r.converged});
    out << sweep_csv(single);
  }
  if (!result.report.converged) return kExitNonConvergence;
  return result.report.self_checks_hold() ? kExitOk : kExitInvariant;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const SweepResult sweep = run_sweep(config);
  const bool linear = config.linear_case();
  const auto dir = prepare_dir(options.out_dir);
  write_file(dir / "sweep.csv", sweep_csv(sweep));
  write_file(dir / "sweep.json", sweep_json(sweep, linear));
  write_file(dir / "sweep.svg", sweep_svg(sweep));
  out << (options.format == OutputFormat::Json ? sweep_json(sweep, linear) : sweep_csv(sweep));

  const bool all_converged =
      std::all_of(sweep.rows.begin(), sweep.rows.end(), [](const SweepRow& r) { return r.converged; });
  if (!all_converged) return kExitNonConvergence;
  if (linear && !sweep.monotone) return kExitInvariant;
  const bool checks = std::all_of(sweep.reports.begin(), sweep.reports.end(),
                                  [](const SolveReport& r) { return r.self_checks_hold(); });
  return checks ? kExitOk : kExitInvariant;
}

}  // namespace evosteer
