#include "evosteer/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "evosteer/error.hpp"

namespace evosteer {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::Domain, "horizon must be positive");
  if (steps < 1) throw Error(ErrorKind::InvalidInput, "need at least one time step");
}

double TimeGrid::time(int j) const noexcept {
  if (j == steps_) return horizon_;
  return horizon_ * j / steps_;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(steps_ + 1);
  for (int j = 0; j <= steps_; ++j) out[j] = time(j);
  return out;
}

double TimeGrid::quadrature_time(int i) const noexcept {
  if (i == 2 * steps_) return horizon_;
  return horizon_ * i / (2.0 * steps_);
}

double TimeGrid::quadrature_weight(int i) const noexcept {
  const double h6 = step() / 6.0;
  if (i == 0 || i == 2 * steps_) return h6;
  return (i % 2 == 1) ? 4.0 * h6 : 2.0 * h6;
}

int TimeGrid::nearest(double t) const noexcept {
  const long j = std::lround(t / horizon_ * steps_);
  return static_cast<int>(std::clamp<long>(j, 0, steps_));
}

}  // namespace evosteer
