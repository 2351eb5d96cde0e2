#pragma once

// Evolution family of x' = a(t) x_xi_xi with Dirichlet conditions on [0, pi]:
// U(t,s) acts on sine mode n as the multiplier exp(-n^2 mu(s,t)),
// mu(s,t) = int_s^t a. The adjoint carries the same multipliers.

#include <vector>

#include <Eigen/Dense>

#include "evosteer/spectral_state.hpp"

namespace evosteer {

enum class CoefficientKind { Constant, Affine, Table };

/// Diffusion coefficient a(t) > 0 with a declared Hoelder bound.
struct CoefficientSpec {
  CoefficientKind kind = CoefficientKind::Constant;
  double base = 1.0;
  double slope = 0.0;
  // Table kind: samples joined piecewise linearly, held constant outside.
  std::vector<double> table_times;
  std::vector<double> table_values;
  double holder_order = 1.0;
  double holder_const = 0.0;

  static CoefficientSpec constant(double a);
  static CoefficientSpec affine(double a0, double slope);
  static CoefficientSpec table(std::vector<double> times, std::vector<double> values);

  double value(double t) const;

  /// Antiderivative A(t) = int_0^t a.
  double antiderivative(double t) const;

  /// Positivity on [0, T] and the Hoelder bound on a verification grid.
  void validate(double horizon) const;
};

/// Multiplier sequence E_n(s,t) for n = 1..N, with the compactness verdict.
struct CompactnessProfile {
  Eigen::VectorXd multipliers;
  bool compact = false;
};

class EvolutionFamily {
 public:
  EvolutionFamily(CoefficientSpec coefficient, double horizon, int modes);

  const CoefficientSpec& coefficient() const noexcept { return coefficient_; }
  double horizon() const noexcept { return horizon_; }
  int modes() const noexcept { return modes_; }

  double mu(double s, double t) const;

  /// E_n(s,t) = exp(-n^2 mu(s,t)).
  Eigen::VectorXd multipliers(double s, double t) const;

  ModeVector apply(double t, double s, const ModeVector& f) const;
  ModeVector apply_adjoint(double t, double s, const ModeVector& g) const;

  CompactnessProfile compactness_profile(double t, double s) const;

 private:
  void check_times(double s, double t) const;

  CoefficientSpec coefficient_;
  double horizon_;
  int modes_;
  Eigen::VectorXd squares_;
};

}  // namespace evosteer
