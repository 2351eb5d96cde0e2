#pragma once

// Control operator Bu = 2 u_2 w_1 + sum_{n>=2} u_n w_n, its adjoint, the
// controllability Gramian, the duality resolvent and the feedback law.

#include <vector>

#include <Eigen/Dense>

#include "evosteer/evolution.hpp"
#include "evosteer/spectral_state.hpp"
#include "evosteer/time_grid.hpp"

namespace evosteer {

/// Coefficients u_n for n = 2..N (index n-2); the control space has no mode 1.
struct ControlVector {
  Eigen::VectorXd coeffs;

  ControlVector() = default;
  explicit ControlVector(Eigen::VectorXd c) : coeffs(std::move(c)) {}

  double norm() const { return coeffs.norm(); }
};

class InputOperator {
 public:
  /// gain scales the whole operator; gain = 0 is the degenerate B = 0.
  explicit InputOperator(int modes, double gain = 1.0);

  int modes() const noexcept { return modes_; }
  double gain() const noexcept { return gain_; }
  /// ||B|| = sqrt(5) |gain|.
  double norm_bound() const;

  ModeVector apply(const ControlVector& u) const;
  ControlVector apply_adjoint(const ModeVector& xs) const;

  /// N x (N-1) matrix of B in mode coordinates.
  Eigen::MatrixXd matrix() const;

 private:
  int modes_;
  double gain_;
};

/// Psi = int_0^T U(T,t) B B* U*(T,t) dt in mode coordinates.
struct GramianMatrix {
  Eigen::MatrixXd values;
  double horizon = 0.0;

  double symmetry_defect() const;
  double min_eigenvalue() const;
};

/// Composite Simpson assembly on the grid's panels.
GramianMatrix assemble_gramian(const EvolutionFamily& family, const InputOperator& input,
                               const TimeGrid& grid);

/// Convenience form: constant input gain 1 on a uniform grid of `steps` panels.
GramianMatrix gramian(double horizon, const CoefficientSpec& coefficient, int modes, int steps);

struct ResolventOptions {
  double tolerance = 1e-12;  ///< on ||residual|| / (lambda ||h||)
  int max_iterations = 60;
  bool force_newton = false;         ///< iterate even when p = 2
  bool linear_initial_guess = true;  ///< start from the p = 2 solution, else from h
};

struct ResolventResult {
  ModeVector z;
  int iterations = 0;
  double residual = 0.0;  ///< ||lambda z + Psi J[z] - lambda h||
  bool converged = true;
};

/// Solves lambda z + Psi J[z] = lambda h, i.e. z = lambda R(lambda, Psi) h.
ResolventResult resolvent_solve(double lambda, const GramianMatrix& psi, const ModeVector& h,
                                double p, const SineBasis& basis,
                                const ResolventOptions& options = {});

/// u(t) sampled at every quadrature node of the grid.
struct ControlSignal {
  TimeGrid grid;
  std::vector<ControlVector> values;

  static ControlSignal zero(const TimeGrid& grid, int modes);

  const ControlVector& at_node(int j) const { return values[2 * j]; }
  double sup_norm() const;
  double l2_norm() const;
  double energy() const;  ///< int_0^T ||u||^2
};

/// u(t) = B* U*(T,t) dual, sampled on the grid.
ControlSignal control_from_dual(const EvolutionFamily& family, const InputOperator& input,
                                const TimeGrid& grid, const ModeVector& dual);

struct FeedbackLaw {
  ResolventResult resolvent;  ///< z = lambda R(lambda, Psi) g
  ModeVector dual;            ///< J[R(lambda, Psi) g] in modes
  ControlSignal control;
};

/// u_lambda(t) = B* U*(T,t) J[R(lambda, Psi) g] for a given defect g.
FeedbackLaw feedback_control(double lambda, const GramianMatrix& psi,
                             const EvolutionFamily& family, const InputOperator& input,
                             const SineBasis& basis, const TimeGrid& grid, const ModeVector& g,
                             double p, const ResolventOptions& options = {});

struct UniqueContinuationReport {
  int samples = 0;
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
  double floor = 0.0;
  bool passes = false;
};

/// Smallest singular value of x* -> (B* U*(T, t_j) x*)_j over uniform samples on [0, T].
UniqueContinuationReport unique_continuation_check(const EvolutionFamily& family,
                                                   const InputOperator& input, int samples,
                                                   double floor = 1e-10);

}  // namespace evosteer
