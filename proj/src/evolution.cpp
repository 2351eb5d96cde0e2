#include "evosteer/evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss_panel(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t k = 0; k < kGaussNodes.size(); ++k) sum += kGaussWeights[k] * f(mid + half * kGaussNodes[k]);
  return half * sum;
}

constexpr double kTimeSlack = 1e-12;

}  // namespace

CoefficientSpec CoefficientSpec::constant(double a) {
  CoefficientSpec c;
  c.kind = CoefficientKind::Constant;
  c.base = a;
  return c;
}

CoefficientSpec CoefficientSpec::affine(double a0, double slope) {
  CoefficientSpec c;
  c.kind = CoefficientKind::Affine;
  c.base = a0;
  c.slope = slope;
  c.holder_const = std::abs(slope);
  return c;
}

CoefficientSpec CoefficientSpec::table(std::vector<double> times, std::vector<double> values) {
  CoefficientSpec c;
  c.kind = CoefficientKind::Table;
  c.table_times = std::move(times);
  c.table_values = std::move(values);
  double lip = 0.0;
  for (std::size_t i = 1; i < c.table_times.size(); ++i) {
    const double dt = c.table_times[i] - c.table_times[i - 1];
    if (dt > 0) lip = std::max(lip, std::abs(c.table_values[i] - c.table_values[i - 1]) / dt);
  }
  c.holder_const = lip;
  return c;
}

double CoefficientSpec::value(double t) const {
  switch (kind) {
    case CoefficientKind::Constant: return base;
    case CoefficientKind::Affine: return base + slope * t;
    case CoefficientKind::Table: {
      if (t <= table_times.front()) return table_values.front();
      if (t >= table_times.back()) return table_values.back();
      const auto it = std::upper_bound(table_times.begin(), table_times.end(), t);
      const auto i = static_cast<std::size_t>(it - table_times.begin());
      const double w = (t - table_times[i - 1]) / (table_times[i] - table_times[i - 1]);
      return (1.0 - w) * table_values[i - 1] + w * table_values[i];
    }
  }
  return base;
}

double CoefficientSpec::antiderivative(double t) const {
  switch (kind) {
    case CoefficientKind::Constant: return base * t;
    case CoefficientKind::Affine: return base * t + 0.5 * slope * t * t;
    case CoefficientKind::Table: {
      // Panels aligned with the breakpoints; Gauss-Legendre is exact on each linear piece.
      const auto a = [this](double tau) { return value(tau); };
      double sum = 0.0;
      double left = 0.0;
      for (double knot : table_times) {
        if (knot <= left) continue;
        if (knot >= t) break;
        sum += gauss_panel(a, left, knot);
        left = knot;
      }
      if (t > left) sum += gauss_panel(a, left, t);
      return sum;
    }
  }
  return 0.0;
}

void CoefficientSpec::validate(double horizon) const {
  if (kind == CoefficientKind::Table) {
    if (table_times.size() < 2 || table_times.size() != table_values.size()) {
      throw Error(ErrorKind::InvalidInput, "table coefficient needs >= 2 matching samples");
    }
    for (std::size_t i = 1; i < table_times.size(); ++i) {
      if (!(table_times[i] > table_times[i - 1])) {
        throw Error(ErrorKind::InvalidInput, "table times must be strictly increasing");
      }
    }
  }
  if (!(holder_order > 0.0 && holder_order <= 1.0) || holder_const < 0.0) {
    throw Error(ErrorKind::InvalidInput, "Hoelder order must be in (0, 1] with constant >= 0");
  }
  constexpr int kSamples = 201;
  std::vector<double> ts(kSamples), as(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    ts[i] = horizon * i / (kSamples - 1);
    as[i] = value(ts[i]);
    if (!(as[i] > 0.0) || !std::isfinite(as[i])) {
      throw Error(ErrorKind::InvalidInput, "coefficient a(t) must be positive on [0, T]");
    }
  }
  if (kind == CoefficientKind::Table) {
    for (double v : table_values) {
      if (!(v > 0.0)) throw Error(ErrorKind::InvalidInput, "table coefficient must be positive");
    }
  }
  for (int i = 0; i < kSamples; ++i) {
    for (int j = i + 1; j < kSamples; ++j) {
      const double bound = holder_const * std::pow(ts[j] - ts[i], holder_order);
      if (std::abs(as[j] - as[i]) > bound * (1.0 + 1e-12) + 1e-14) {
        throw Error(ErrorKind::InvalidInput, "declared Hoelder bound violated by a(t)");
      }
    }
  }
}

EvolutionFamily::EvolutionFamily(CoefficientSpec coefficient, double horizon, int modes)
    : coefficient_(std::move(coefficient)), horizon_(horizon), modes_(modes), squares_(modes) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::Domain, "horizon must be positive");
  if (modes < 1) throw Error(ErrorKind::InvalidInput, "need at least one mode");
  coefficient_.validate(horizon_);
  for (int n = 1; n <= modes_; ++n) squares_[n - 1] = static_cast<double>(n) * n;
}

void EvolutionFamily::check_times(double s, double t) const {
  if (s > t) {
    throw Error(ErrorKind::Ordering, "need s <= t, got s=" + std::to_string(s) +
                                         " t=" + std::to_string(t));
  }
  const double slack = kTimeSlack * std::max(1.0, horizon_);
  if (s < -slack || t > horizon_ + slack) {
    throw Error(ErrorKind::Domain, "times must lie in [0, T]");
  }
}

double EvolutionFamily::mu(double s, double t) const {
  check_times(s, t);
  if (s == t) return 0.0;
  switch (coefficient_.kind) {
    case CoefficientKind::Constant: return coefficient_.base * (t - s);
    case CoefficientKind::Affine:
      return (t - s) * (coefficient_.base + 0.5 * coefficient_.slope * (t + s));
    case CoefficientKind::Table:
      return coefficient_.antiderivative(t) - coefficient_.antiderivative(s);
  }
  return 0.0;
}

Eigen::VectorXd EvolutionFamily::multipliers(double s, double t) const {
  const double m = mu(s, t);
  return (-m * squares_.array()).exp().matrix();
}

ModeVector EvolutionFamily::apply(double t, double s, const ModeVector& f) const {
  if (f.size() != modes_) throw Error(ErrorKind::Dimension, "mode vector length mismatch");
  return ModeVector(multipliers(s, t).cwiseProduct(f.coeffs));
}

ModeVector EvolutionFamily::apply_adjoint(double t, double s, const ModeVector& g) const {
  return apply(t, s, g);
}

CompactnessProfile EvolutionFamily::compactness_profile(double t, double s) const {
  CompactnessProfile profile;
  profile.multipliers = multipliers(s, t);
  profile.compact = t > s;
  return profile;
}

}  // namespace evosteer
