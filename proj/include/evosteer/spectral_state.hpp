#pragma once

// Elements of X_p = L^p([0, pi]) on a uniform quadrature grid, their duals,
// and the Dirichlet sine basis w_n(xi) = sqrt(2/pi) sin(n xi).

#include <memory>

#include <Eigen/Dense>

namespace evosteer {

/// Uniform grid of M points on [0, pi] with composite trapezoid weights.
class SpatialGrid {
 public:
  static std::shared_ptr<const SpatialGrid> make(int points);

  int points() const noexcept { return static_cast<int>(nodes_.size()); }
  double spacing() const noexcept { return spacing_; }
  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

 private:
  explicit SpatialGrid(int points);

  double spacing_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

double conjugate_exponent(double p);

/// Element of X_p sampled on a grid.
class StateVector {
 public:
  StateVector(GridPtr grid, Eigen::VectorXd values, double p);

  static StateVector zero(GridPtr grid, double p);
  static StateVector constant(GridPtr grid, double value, double p);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double p() const noexcept { return p_; }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
  double p_;
};

/// Element of X_p^* = L^q sampled on the same grid.
class DualVector {
 public:
  DualVector(GridPtr grid, Eigen::VectorXd values, double q);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double q() const noexcept { return q_; }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
  double q_;
};

/// Sine coefficients for modes n = 1..N (index n-1).
struct ModeVector {
  Eigen::VectorXd coeffs;

  ModeVector() = default;
  explicit ModeVector(Eigen::VectorXd c) : coeffs(std::move(c)) {}
  static ModeVector zero(int modes) { return ModeVector(Eigen::VectorXd::Zero(modes)); }
  static ModeVector unit(int modes, int n);

  int size() const noexcept { return static_cast<int>(coeffs.size()); }
};

/// Weighted discrete L^r norm (sum_i w_i |v_i|^r)^(1/r).
double weighted_norm(const Eigen::VectorXd& values, const Eigen::VectorXd& weights, double r);

double lp_norm(const StateVector& x);
double dual_norm(const DualVector& xs);
double pairing(const StateVector& x, const DualVector& xs);

/// J[x] = ||x||_p^(2-p) |x|^(p-2) x, the single-valued duality map for 1 < p < inf.
DualVector duality_map(const StateVector& x);

/// Same map acting on raw grid values.
Eigen::VectorXd duality_values(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                               double p);

/// Jacobian of duality_values: diag(a) + b c^T, returned as (a, b, c).
struct DualityJacobian {
  Eigen::VectorXd diagonal;
  Eigen::VectorXd left;
  Eigen::VectorXd right;
};
DualityJacobian duality_jacobian(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                                 double p);

/// Synthesis/analysis between grid values and the first N sine modes.
///
/// Analysis uses the grid's trapezoid weights, so that on the uniform grid
/// the discrete sines are exactly orthonormal for N < M - 1 and
/// to_modes(from_modes(c)) == c up to roundoff.
class SineBasis {
 public:
  SineBasis(GridPtr grid, int modes);

  const GridPtr& grid() const noexcept { return grid_; }
  int modes() const noexcept { return modes_; }

  /// M x N matrix with entries w_n(xi_i).
  const Eigen::MatrixXd& synthesis() const noexcept { return synthesis_; }
  /// N x M matrix, synthesis^T * diag(weights).
  const Eigen::MatrixXd& analysis() const noexcept { return analysis_; }

  ModeVector to_modes(const StateVector& x) const;
  ModeVector to_modes(const DualVector& xs) const;
  Eigen::VectorXd to_modes(const Eigen::VectorXd& values) const;
  StateVector from_modes(const ModeVector& c, double p) const;
  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;

  /// X_p norm of the function with the given coefficients.
  double state_norm(const ModeVector& c, double p) const;

 private:
  GridPtr grid_;
  int modes_;
  Eigen::MatrixXd synthesis_;
  Eigen::MatrixXd analysis_;
};

/// w_n on the grid.
Eigen::VectorXd eigenfunction(const SpatialGrid& grid, int n);

}  // namespace evosteer
