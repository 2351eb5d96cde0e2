#include "evosteer/inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double Envelope::lower(double v) const {
  switch (kind) {
    case EnvelopeKind::Zero: return 0.0;
    case EnvelopeKind::Constant: return level - width;
    case EnvelopeKind::Tanh: return std::tanh(v) - width;
  }
  return 0.0;
}

double Envelope::upper(double v) const {
  switch (kind) {
    case EnvelopeKind::Zero: return 0.0;
    case EnvelopeKind::Constant: return level + width;
    case EnvelopeKind::Tanh: return std::tanh(v) + width;
  }
  return 0.0;
}

double Envelope::sup_abs() const {
  switch (kind) {
    case EnvelopeKind::Zero: return 0.0;
    case EnvelopeKind::Constant: return std::abs(level) + width;
    case EnvelopeKind::Tanh: return 1.0 + width;
  }
  return 0.0;
}

double TimeWeight::operator()(double t) const {
  return base + amplitude * std::sin(frequency * t);
}

double TimeWeight::integral(double horizon) const {
  if (frequency == 0.0) return base * horizon;
  return base * horizon + amplitude * (1.0 - std::cos(frequency * horizon)) / frequency;
}

void InclusionSpec::validate() const {
  if (!(envelope.width >= 0.0) || !std::isfinite(envelope.level)) {
    throw Error(ErrorKind::InvalidInput, "envelope width must be nonnegative");
  }
  if (weight.base < std::abs(weight.amplitude)) {
    throw Error(ErrorKind::InvalidInput, "time weight beta(t) must stay nonnegative");
  }
  if (!(delay > 0.0)) throw Error(ErrorKind::InvalidInput, "delay r must be positive");
}

double InclusionSpec::gamma(double t, double p) const {
  return weight(t) * envelope.sup_abs() * std::pow(std::numbers::pi, 1.0 / p);
}

double InclusionSpec::gamma_l1(double horizon, double p) const {
  return weight.integral(horizon) * envelope.sup_abs() * std::pow(std::numbers::pi, 1.0 / p);
}

IntervalField evaluate_F(double t, const StateVector& delayed, const InclusionSpec& spec) {
  const double beta = spec.weight(t);
  const Eigen::VectorXd& v = delayed.values();
  Eigen::VectorXd lo(v.size()), hi(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    lo[i] = beta * spec.envelope.lower(v[i]);
    hi[i] = beta * spec.envelope.upper(v[i]);
  }
  return {StateVector(delayed.grid(), std::move(lo), delayed.p()),
          StateVector(delayed.grid(), std::move(hi), delayed.p())};
}

IntervalField evaluate_F(double t, const HistorySegment& psi, const InclusionSpec& spec) {
  if (spec.delay > psi.window() * (1.0 + 1e-12)) {
    throw Error(ErrorKind::Window, "segment window does not cover the delay");
  }
  return evaluate_F(t, psi.at(-spec.delay), spec);
}

double SelectionPolicy::coefficient(double t, long index) const {
  switch (kind) {
    case SelectionKind::Lower: return 0.0;
    case SelectionKind::Upper: return 1.0;
    case SelectionKind::Midpoint: return 0.5;
    case SelectionKind::ConvexMix: return std::clamp(mix + mix_slope * t, 0.0, 1.0);
    case SelectionKind::SeededRandom: {
      const std::uint64_t bits =
          splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
      return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }
  }
  return 0.5;
}

StateVector select(const IntervalField& field, const SelectionPolicy& policy, double t,
                   long index) {
  switch (policy.kind) {
    case SelectionKind::Lower: return field.lo;
    case SelectionKind::Upper: return field.hi;
    case SelectionKind::Midpoint:
      return StateVector(field.lo.grid(), 0.5 * (field.lo.values() + field.hi.values()),
                         field.lo.p());
    default: break;
  }
  const double alpha = policy.coefficient(t, index);
  Eigen::VectorXd v = field.lo.values() + alpha * (field.hi.values() - field.lo.values());
  // Keep the result inside [lo, hi] despite rounding.
  v = v.cwiseMax(field.lo.values()).cwiseMin(field.hi.values());
  return StateVector(field.lo.grid(), std::move(v), field.lo.p());
}

StateVector delayed_state(const PiecewiseTrajectory& x, const SineBasis& basis,
                          const HistorySpec& phi, double p, double s) {
  if (s <= 0.0) return phi.value_at(s, basis.grid(), p);
  return basis.from_modes(x.at(s), p);
}

SelectionSamples nemytskii(const PiecewiseTrajectory& x, const SineBasis& basis,
                           const HistorySpec& phi, double p, const InclusionSpec& spec,
                           const SelectionPolicy& policy, const std::vector<double>& times) {
  SelectionSamples out;
  out.times = times;
  out.fields.reserve(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (spec.weight(t) == 0.0 || spec.envelope.kind == EnvelopeKind::Zero) {
      out.fields.push_back(StateVector::zero(basis.grid(), p));
      continue;
    }
    const StateVector v = delayed_state(x, basis, phi, p, t - spec.delay);
    out.fields.push_back(select(evaluate_F(t, v, spec), policy, t, static_cast<long>(j)));
  }
  return out;
}

}  // namespace evosteer
