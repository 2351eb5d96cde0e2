#include "evosteer/steering.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "evosteer/error.hpp"

namespace evosteer {

InputOperator::InputOperator(int modes, double gain) : modes_(modes), gain_(gain) {
  if (modes < 2) throw Error(ErrorKind::InvalidInput, "control space needs at least two modes");
  if (!std::isfinite(gain)) throw Error(ErrorKind::InvalidInput, "input gain must be finite");
}

double InputOperator::norm_bound() const { return std::sqrt(5.0) * std::abs(gain_); }

ModeVector InputOperator::apply(const ControlVector& u) const {
  if (u.coeffs.size() != modes_ - 1) throw Error(ErrorKind::Dimension, "control length mismatch");
  ModeVector out = ModeVector::zero(modes_);
  out.coeffs.tail(modes_ - 1) = gain_ * u.coeffs;
  out.coeffs[0] = 2.0 * gain_ * u.coeffs[0];
  return out;
}

ControlVector InputOperator::apply_adjoint(const ModeVector& xs) const {
  if (xs.size() != modes_) throw Error(ErrorKind::Dimension, "mode vector length mismatch");
  ControlVector u(gain_ * xs.coeffs.tail(modes_ - 1));
  u.coeffs[0] += 2.0 * gain_ * xs.coeffs[0];
  return u;
}

Eigen::MatrixXd InputOperator::matrix() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(modes_, modes_ - 1);
  b(0, 0) = 2.0 * gain_;
  for (int n = 1; n < modes_; ++n) b(n, n - 1) = gain_;
  return b;
}

double GramianMatrix::symmetry_defect() const {
  return (values - values.transpose()).cwiseAbs().maxCoeff();
}

double GramianMatrix::min_eigenvalue() const {
  const Eigen::MatrixXd sym = 0.5 * (values + values.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

GramianMatrix assemble_gramian(const EvolutionFamily& family, const InputOperator& input,
                               const TimeGrid& grid) {
  const int n = family.modes();
  if (input.modes() != n) throw Error(ErrorKind::Dimension, "input operator modes mismatch");
  if (std::abs(grid.horizon() - family.horizon()) > 1e-12 * family.horizon()) {
    throw Error(ErrorKind::Domain, "time grid horizon differs from the evolution horizon");
  }
  const Eigen::MatrixXd bb = input.matrix() * input.matrix().transpose();
  GramianMatrix psi;
  psi.horizon = grid.horizon();
  psi.values = Eigen::MatrixXd::Zero(n, n);
  // B B^* couples only modes 1 and 2; everything else is diagonal.
  for (int i = 0; i < grid.quadrature_nodes(); ++i) {
    const Eigen::VectorXd e = family.multipliers(grid.quadrature_time(i), grid.horizon());
    const double w = grid.quadrature_weight(i);
    for (int k = 0; k < n; ++k) psi.values(k, k) += w * bb(k, k) * e[k] * e[k];
    if (n >= 2) psi.values(0, 1) += w * bb(0, 1) * e[0] * e[1];
  }
  if (n >= 2) psi.values(1, 0) = psi.values(0, 1);
  return psi;
}

GramianMatrix gramian(double horizon, const CoefficientSpec& coefficient, int modes, int steps) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::Domain, "horizon must be positive");
  const EvolutionFamily family(coefficient, horizon, modes);
  return assemble_gramian(family, InputOperator(modes), TimeGrid(horizon, steps));
}

namespace {

struct Residual {
  Eigen::VectorXd f;
  Eigen::VectorXd dual;
  double norm = 0.0;
};

Residual residual_at(double lambda, const Eigen::MatrixXd& psi, const Eigen::VectorXd& c,
                     const Eigen::VectorXd& h, double p, const SineBasis& basis) {
  Residual r;
  const Eigen::VectorXd z = basis.synthesize(c);
  r.dual = basis.to_modes(duality_values(z, basis.grid()->weights(), p));
  r.f = lambda * c + psi * r.dual - lambda * h;
  r.norm = r.f.norm();
  return r;
}

}  // namespace

ResolventResult resolvent_solve(double lambda, const GramianMatrix& psi, const ModeVector& h,
                                double p, const SineBasis& basis,
                                const ResolventOptions& options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidInput, "lambda must be positive");
  }
  const int n = basis.modes();
  if (h.size() != n || psi.values.rows() != n) {
    throw Error(ErrorKind::Dimension, "resolvent operands have inconsistent mode counts");
  }
  ResolventResult out;
  const double h_norm = h.coeffs.norm();
  if (h_norm == 0.0) {
    out.z = ModeVector::zero(n);
    return out;
  }
  const Eigen::MatrixXd shifted = psi.values + lambda * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd linear = shifted.ldlt().solve(lambda * h.coeffs);
  if (p == 2.0 && !options.force_newton) {
    out.z = ModeVector(linear);
    out.residual = (shifted * linear - lambda * h.coeffs).norm();
    return out;
  }

  // Damped Newton on c -> lambda c + Psi P J(S c) - lambda h.
  const Eigen::MatrixXd& syn = basis.synthesis();
  const Eigen::VectorXd& weights = basis.grid()->weights();
  const double psi_norm = psi.values.norm();
  const double eps = std::numeric_limits<double>::epsilon();
  Eigen::VectorXd c = options.linear_initial_guess ? linear : h.coeffs;
  Residual r = residual_at(lambda, psi.values, c, h.coeffs, p, basis);
  const auto at_floor = [&](const Residual& res) {
    return res.norm <= 1e3 * eps * (lambda * c.norm() + psi_norm * res.dual.norm() + lambda * h_norm);
  };
  int iter = 0;
  bool converged = r.norm <= options.tolerance * lambda * h_norm;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    const Eigen::VectorXd z = basis.synthesize(c);
    const DualityJacobian dj = duality_jacobian(z, weights, p);
    const Eigen::MatrixXd dense =
        syn.transpose() * (weights.cwiseProduct(dj.diagonal)).asDiagonal() * syn;
    const Eigen::VectorXd left = basis.to_modes(dj.left);
    const Eigen::RowVectorXd right = dj.right.transpose() * syn;
    const Eigen::MatrixXd jac =
        lambda * Eigen::MatrixXd::Identity(n, n) + psi.values * (dense + left * right);
    const Eigen::VectorXd step = jac.partialPivLu().solve(-r.f);

    double t = 1.0;
    Residual trial = residual_at(lambda, psi.values, c + step, h.coeffs, p, basis);
    while (trial.norm > (1.0 - 1e-4 * t) * r.norm && t > 1e-10) {
      t *= 0.5;
      trial = residual_at(lambda, psi.values, c + t * step, h.coeffs, p, basis);
    }
    const bool stalled = trial.norm >= r.norm || (t * step).norm() <= 1e-15 * c.norm();
    if (trial.norm < r.norm) {
      c += t * step;
      r = std::move(trial);
    }
    converged = r.norm <= options.tolerance * lambda * h_norm || (stalled && at_floor(r));
    if (stalled && !converged) break;
  }
  out.z = ModeVector(c);
  out.iterations = iter;
  out.residual = r.norm;
  out.converged = converged;
  if (!converged) {
    std::ostringstream msg;
    msg << "resolvent Newton did not converge (lambda=" << lambda << ", p=" << p
        << ", iterations=" << iter << ", residual=" << r.norm << ")";
    throw Error(ErrorKind::SolverFailure, msg.str());
  }
  return out;
}

ControlSignal ControlSignal::zero(const TimeGrid& grid, int modes) {
  return ControlSignal{
      grid, std::vector<ControlVector>(grid.quadrature_nodes(),
                                       ControlVector(Eigen::VectorXd::Zero(modes - 1)))};
}

double ControlSignal::sup_norm() const {
  double s = 0.0;
  for (const auto& u : values) s = std::max(s, u.norm());
  return s;
}

double ControlSignal::energy() const {
  double e = 0.0;
  for (int i = 0; i < grid.quadrature_nodes(); ++i) {
    e += grid.quadrature_weight(i) * values[i].coeffs.squaredNorm();
  }
  return e;
}

double ControlSignal::l2_norm() const { return std::sqrt(energy()); }

ControlSignal control_from_dual(const EvolutionFamily& family, const InputOperator& input,
                                const TimeGrid& grid, const ModeVector& dual) {
  ControlSignal signal{grid, {}};
  signal.values.reserve(grid.quadrature_nodes());
  for (int i = 0; i < grid.quadrature_nodes(); ++i) {
    const double t = grid.quadrature_time(i);
    signal.values.push_back(input.apply_adjoint(family.apply_adjoint(grid.horizon(), t, dual)));
  }
  return signal;
}

FeedbackLaw feedback_control(double lambda, const GramianMatrix& psi,
                             const EvolutionFamily& family, const InputOperator& input,
                             const SineBasis& basis, const TimeGrid& grid, const ModeVector& g,
                             double p, const ResolventOptions& options) {
  ResolventResult resolvent = resolvent_solve(lambda, psi, g, p, basis, options);
  // J is positively homogeneous, so J[R g] = J[z] / lambda.
  const Eigen::VectorXd z = basis.synthesize(resolvent.z.coeffs);
  ModeVector dual(basis.to_modes(duality_values(z, basis.grid()->weights(), p)) / lambda);
  ControlSignal control = control_from_dual(family, input, grid, dual);
  return FeedbackLaw{std::move(resolvent), std::move(dual), std::move(control)};
}

UniqueContinuationReport unique_continuation_check(const EvolutionFamily& family,
                                                   const InputOperator& input, int samples,
                                                   double floor) {
  const int n = family.modes();
  if (samples < n) throw Error(ErrorKind::InvalidInput, "need at least N time samples");
  const Eigen::MatrixXd bstar = input.matrix().transpose();
  Eigen::MatrixXd sampling(samples * (n - 1), n);
  const double horizon = family.horizon();
  for (int j = 0; j < samples; ++j) {
    const double t = horizon * j / (samples - 1);
    const Eigen::VectorXd e = family.multipliers(t, horizon);
    sampling.middleRows(j * (n - 1), n - 1) = bstar * e.asDiagonal();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sampling);
  UniqueContinuationReport report;
  report.samples = samples;
  report.smallest_singular_value = svd.singularValues().minCoeff();
  report.largest_singular_value = svd.singularValues().maxCoeff();
  report.floor = floor;
  report.passes = report.smallest_singular_value > floor;
  return report;
}

}  // namespace evosteer
