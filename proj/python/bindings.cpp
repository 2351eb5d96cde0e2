#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "evosteer/config.hpp"
#include "evosteer/error.hpp"
#include "evosteer/experiments.hpp"

namespace py = pybind11;
using namespace evosteer;

namespace {

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["lambda"] = r.lambda;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["corrections"] = r.corrections;
  d["final_increment"] = r.final_increment;
  d["terminal_error"] = r.terminal_error;
  d["control_l2"] = r.control_l2;
  d["control_sup"] = r.control_sup;
  d["cost"] = r.cost;
  d["terminal_identity_residual"] = r.terminal_identity_residual;
  d["terminal_identity_limit"] = r.terminal_identity_limit;
  d["control_bound"] = r.control_bound;
  d["orbit_sup"] = r.orbit_sup;
  d["orbit_bound"] = r.orbit_bound;
  d["growth_bound_min_margin"] = r.growth_bound_min_margin;
  d["growth_bound_holds"] = r.growth_bound_holds;
  return d;
}

CoefficientSpec constant_coefficient(double a) { return CoefficientSpec::constant(a); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral evolution family, duality resolvent and feedback steering";

  py::register_exception<Error>(m, "EvosteerError", PyExc_ValueError);

  m.def("lp_norm", [](const Eigen::VectorXd& values, double p) {
    return lp_norm(StateVector(SpatialGrid::make(static_cast<int>(values.size())), values, p));
  }, py::arg("values"), py::arg("p"), "Trapezoid L^p norm of samples on a uniform grid over [0, pi].");

  m.def("duality_map", [](const Eigen::VectorXd& values, double p) {
    return Eigen::VectorXd(duality_map(StateVector(SpatialGrid::make(static_cast<int>(values.size())), values, p)).values());
  }, py::arg("values"), py::arg("p"));

  m.def("multipliers", [](double s, double t, double a, int modes) {
    return EvolutionFamily(constant_coefficient(a), std::max(s, t), modes).multipliers(s, t);
  }, py::arg("s"), py::arg("t"), py::arg("a") = 1.0, py::arg("modes") = 8);

  m.def("gramian", [](double horizon, double a, int modes, int steps) {
    return gramian(horizon, constant_coefficient(a), modes, steps).values;
  }, py::arg("horizon") = 1.0, py::arg("a") = 1.0, py::arg("modes") = 8, py::arg("steps") = 1000);

  m.def("resolvent_solve", [](double lambda, const Eigen::MatrixXd& psi, const Eigen::VectorXd& h,
                              double p, int grid_points) {
    const SineBasis basis(SpatialGrid::make(grid_points), static_cast<int>(h.size()));
    return resolvent_solve(lambda, GramianMatrix{psi, 0.0}, ModeVector(h), p, basis).z.coeffs;
  }, py::arg("lam"), py::arg("psi"), py::arg("h"), py::arg("p") = 2.0, py::arg("grid_points") = 129);

  m.def("unique_continuation", [](double horizon, double a, int modes, int samples, double gain) {
    const auto r = unique_continuation_check(EvolutionFamily(constant_coefficient(a), horizon, modes),
                                             InputOperator(modes, gain), samples);
    return py::make_tuple(r.smallest_singular_value, r.passes);
  }, py::arg("horizon") = 1.0, py::arg("a") = 1.0, py::arg("modes") = 8, py::arg("samples") = 64,
     py::arg("gain") = 1.0);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("horizon", &RunConfig::horizon)
      .def_readonly("modes", &RunConfig::modes)
      .def_readonly("p", &RunConfig::p)
      .def_readonly("lambdas", &RunConfig::lambdas)
      .def_readonly("seed", &RunConfig::seed);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<string>");
  m.def("load_config", &load_config, py::arg("path"));

  m.def("check", [](const RunConfig& c) {
    std::optional<CheckReport> checked;
    {
      py::gil_scoped_release release;
      checked.emplace(run_checks(c));
    }
    const CheckReport& report = *checked;
    py::dict suites;
    for (const auto& s : report.suites) suites[py::str(s.name)] = s.passed;
    return py::make_tuple(report.passed(), suites);
  }, py::arg("config"));

  m.def("steer", [](const RunConfig& c, double lambda) {
    std::optional<SteeringResult> solved;
    {
      py::gil_scoped_release release;
      solved.emplace(run_steer(c, lambda));
    }
    const SteeringResult& result = *solved;
    const int n = result.trajectory.nodes();
    Eigen::MatrixXd states(n, result.trajectory.states.front().size());
    for (int j = 0; j < n; ++j) states.row(j) = result.trajectory.states[j].coeffs.transpose();
    py::dict out = report_dict(result.report);
    out["times"] = result.trajectory.times;
    out["states"] = states;
    return out;
  }, py::arg("config"), py::arg("lam"));

  m.def("sweep", [](const RunConfig& c) {
    SweepResult sweep;
    {
      py::gil_scoped_release release;
      sweep = run_sweep(c);
    }
    py::list rows;
    for (const auto& r : sweep.reports) rows.append(report_dict(r));
    return rows;
  }, py::arg("config"));
}
