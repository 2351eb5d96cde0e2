#include "evosteer/spectral_state.hpp"

#include <cmath>
#include <numbers>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

void require_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw Error(ErrorKind::InvalidInput, "exponent must lie in (1, inf), got " + std::to_string(p));
  }
}

void require_finite(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite grid values");
}

void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (a != b && a->points() != b->points()) {
    throw Error(ErrorKind::Dimension, "grid size " + std::to_string(a->points()) + " vs " +
                                          std::to_string(b->points()));
  }
}

// |v|^(e-1) sign(v), defined as 0 at v = 0.
double signed_power(double v, double e) {
  if (v == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(v), e - 1.0), v);
}

}  // namespace

SpatialGrid::SpatialGrid(int points)
    : spacing_(std::numbers::pi / (points - 1)), nodes_(points), weights_(points) {
  for (int i = 0; i < points; ++i) {
    nodes_[i] = i * spacing_;
    weights_[i] = spacing_;
  }
  weights_[0] = weights_[points - 1] = 0.5 * spacing_;
}

std::shared_ptr<const SpatialGrid> SpatialGrid::make(int points) {
  if (points < 4) throw Error(ErrorKind::InvalidInput, "grid needs at least 4 points");
  return std::shared_ptr<const SpatialGrid>(new SpatialGrid(points));
}

double conjugate_exponent(double p) {
  require_exponent(p);
  return p / (p - 1.0);
}

StateVector::StateVector(GridPtr grid, Eigen::VectorXd values, double p)
    : grid_(std::move(grid)), values_(std::move(values)), p_(p) {
  require_exponent(p_);
  if (values_.size() != grid_->points()) {
    throw Error(ErrorKind::Dimension, "state has " + std::to_string(values_.size()) +
                                          " values for a grid of " +
                                          std::to_string(grid_->points()));
  }
  require_finite(values_);
}

StateVector StateVector::zero(GridPtr grid, double p) {
  const int m = grid->points();
  return StateVector(std::move(grid), Eigen::VectorXd::Zero(m), p);
}

StateVector StateVector::constant(GridPtr grid, double value, double p) {
  const int m = grid->points();
  return StateVector(std::move(grid), Eigen::VectorXd::Constant(m, value), p);
}

DualVector::DualVector(GridPtr grid, Eigen::VectorXd values, double q)
    : grid_(std::move(grid)), values_(std::move(values)), q_(q) {
  require_exponent(q_);
  if (values_.size() != grid_->points()) throw Error(ErrorKind::Dimension, "dual size mismatch");
  require_finite(values_);
}

ModeVector ModeVector::unit(int modes, int n) {
  if (n < 1 || n > modes) throw Error(ErrorKind::InvalidInput, "mode index out of range");
  ModeVector v = zero(modes);
  v.coeffs[n - 1] = 1.0;
  return v;
}

double weighted_norm(const Eigen::VectorXd& values, const Eigen::VectorXd& weights, double r) {
  if (r == 2.0) return std::sqrt((weights.array() * values.array().square()).sum());
  // Scale by the max to keep |v|^r in range for large r.
  const double scale = values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const double s = (weights.array() * (values.array().abs() / scale).pow(r)).sum();
  return scale * std::pow(s, 1.0 / r);
}

double lp_norm(const StateVector& x) {
  return weighted_norm(x.values(), x.grid()->weights(), x.p());
}

double dual_norm(const DualVector& xs) {
  return weighted_norm(xs.values(), xs.grid()->weights(), xs.q());
}

double pairing(const StateVector& x, const DualVector& xs) {
  require_same_grid(x.grid(), xs.grid());
  return (x.grid()->weights().array() * x.values().array() * xs.values().array()).sum();
}

Eigen::VectorXd duality_values(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                               double p) {
  if (p == 2.0) return values;
  const double norm = weighted_norm(values, weights, p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(values.size());
  if (norm == 0.0) return out;
  // ||x||^(2-p) |x|^(p-2) x == ||x|| * |x/||x|| |^(p-1) sign(x), which stays in range.
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out[i] = norm * signed_power(values[i] / norm, p);
  }
  return out;
}

DualVector duality_map(const StateVector& x) {
  return DualVector(x.grid(), duality_values(x.values(), x.grid()->weights(), x.p()),
                    conjugate_exponent(x.p()));
}

DualityJacobian duality_jacobian(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                                 double p) {
  const Eigen::Index m = values.size();
  DualityJacobian jac{Eigen::VectorXd::Ones(m), Eigen::VectorXd::Zero(m),
                      Eigen::VectorXd::Zero(m)};
  if (p == 2.0) return jac;
  const double norm = weighted_norm(values, weights, p);
  if (norm == 0.0) {
    if (p > 2.0) jac.diagonal.setZero();
    return jac;
  }
  // With y = x / ||x||: dJ = (p-1)|y|^(p-2) dx + (2-p) s(y) (w s(y))^T dx, s(y) = |y|^(p-1) sign(y).
  const double floor = 1e-12;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double y = values[i] / norm;
    const double ay = std::max(std::abs(y), floor);
    const double g = std::pow(ay, p - 2.0);
    jac.diagonal[i] = (p - 1.0) * g;
    jac.left[i] = (2.0 - p) * signed_power(y, p);
    jac.right[i] = weights[i] * signed_power(y, p);
  }
  return jac;
}

Eigen::VectorXd eigenfunction(const SpatialGrid& grid, int n) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return (c * (n * grid.nodes().array()).sin()).matrix();
}

SineBasis::SineBasis(GridPtr grid, int modes) : grid_(std::move(grid)), modes_(modes) {
  if (modes < 1) throw Error(ErrorKind::InvalidInput, "need at least one mode");
  if (2 * modes > grid_->points()) {
    throw Error(ErrorKind::Resolution, std::to_string(modes) + " modes need at least " +
                                           std::to_string(2 * modes) + " grid points, have " +
                                           std::to_string(grid_->points()));
  }
  synthesis_.resize(grid_->points(), modes_);
  for (int n = 1; n <= modes_; ++n) synthesis_.col(n - 1) = eigenfunction(*grid_, n);
  analysis_ = synthesis_.transpose() * grid_->weights().asDiagonal();
}

ModeVector SineBasis::to_modes(const StateVector& x) const {
  require_same_grid(grid_, x.grid());
  return ModeVector(analysis_ * x.values());
}

ModeVector SineBasis::to_modes(const DualVector& xs) const {
  require_same_grid(grid_, xs.grid());
  return ModeVector(analysis_ * xs.values());
}

Eigen::VectorXd SineBasis::to_modes(const Eigen::VectorXd& values) const {
  if (values.size() != grid_->points()) throw Error(ErrorKind::Dimension, "grid size mismatch");
  return analysis_ * values;
}

StateVector SineBasis::from_modes(const ModeVector& c, double p) const {
  return StateVector(grid_, synthesize(c.coeffs), p);
}

Eigen::VectorXd SineBasis::synthesize(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != modes_) {
    throw Error(ErrorKind::Dimension, "expected " + std::to_string(modes_) + " coefficients, got " +
                                          std::to_string(coeffs.size()));
  }
  return synthesis_ * coeffs;
}

double SineBasis::state_norm(const ModeVector& c, double p) const {
  return weighted_norm(synthesize(c.coeffs), grid_->weights(), p);
}

}  // namespace evosteer
