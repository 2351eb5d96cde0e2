#pragma once

#include <vector>

namespace evosteer {

/// Uniform grid t_j = j T / K. Each step carries a Simpson panel whose
/// midpoint is quadrature node 2j+1; grid time t_j is quadrature node 2j.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double step() const noexcept { return horizon_ / steps_; }

  double time(int j) const noexcept;
  std::vector<double> times() const;

  int quadrature_nodes() const noexcept { return 2 * steps_ + 1; }
  double quadrature_time(int i) const noexcept;
  /// Composite Simpson weight of quadrature node i.
  double quadrature_weight(int i) const noexcept;

  /// Index of the grid time nearest to t.
  int nearest(double t) const noexcept;

 private:
  double horizon_;
  int steps_;
};

}  // namespace evosteer
