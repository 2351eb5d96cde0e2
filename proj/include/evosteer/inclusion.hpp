#pragma once

// Interval-valued right-hand side F(t, x_t)(xi) = beta(t) [l(v), u(v)],
// v = x~(t - r)(xi), selection policies, and the Nemytskii lift along a
// trajectory.

#include <cstdint>
#include <vector>

#include "evosteer/phase_space.hpp"
#include "evosteer/spectral_state.hpp"

namespace evosteer {

enum class EnvelopeKind { Zero, Constant, Tanh };

/// Scalar response pair l(v) <= u(v).
struct Envelope {
  EnvelopeKind kind = EnvelopeKind::Zero;
  double level = 0.0;  ///< Constant kind: centre value.
  double width = 0.0;  ///< Half-width eps >= 0.

  double lower(double v) const;
  double upper(double v) const;
  /// sup_v max(|l(v)|, |u(v)|).
  double sup_abs() const;
};

/// beta(t) = base + amplitude sin(frequency t), required nonnegative.
struct TimeWeight {
  double base = 1.0;
  double amplitude = 0.0;
  double frequency = 0.0;

  double operator()(double t) const;
  double integral(double horizon) const;
};

struct InclusionSpec {
  Envelope envelope;
  TimeWeight weight;
  double delay = 0.1;

  void validate() const;

  /// gamma(t) = beta(t) sup|envelope| pi^(1/p), a bound for ||F(t, psi)||_p.
  double gamma(double t, double p) const;
  double gamma_l1(double horizon, double p) const;
};

/// Pointwise order interval [lo, hi].
struct IntervalField {
  StateVector lo;
  StateVector hi;
};

/// F evaluated on the delayed value v = psi(-r) directly.
IntervalField evaluate_F(double t, const StateVector& delayed, const InclusionSpec& spec);

/// F(t, psi) for a segment covering -r.
IntervalField evaluate_F(double t, const HistorySegment& psi, const InclusionSpec& spec);

enum class SelectionKind { Lower, Upper, Midpoint, ConvexMix, SeededRandom };

struct SelectionPolicy {
  SelectionKind kind = SelectionKind::Midpoint;
  /// ConvexMix: alpha(t) = clamp(mix + mix_slope t, 0, 1), result lo + alpha (hi - lo).
  double mix = 0.5;
  double mix_slope = 0.0;
  std::uint64_t seed = 0;

  /// Convex coefficient for the time sample with the given index.
  double coefficient(double t, long index) const;
};

StateVector select(const IntervalField& field, const SelectionPolicy& policy, double t = 0.0,
                   long index = 0);

/// Selection f(t_j) at the sample times, one field per time.
struct SelectionSamples {
  std::vector<double> times;
  std::vector<StateVector> fields;
};

/// x~(s): history for s <= 0, left-continuous trajectory on (0, T].
StateVector delayed_state(const PiecewiseTrajectory& x, const SineBasis& basis,
                          const HistorySpec& phi, double p, double s);

/// N_F(x) realized by the policy at each time.
SelectionSamples nemytskii(const PiecewiseTrajectory& x, const SineBasis& basis,
                           const HistorySpec& phi, double p, const InclusionSpec& spec,
                           const SelectionPolicy& policy, const std::vector<double>& times);

}  // namespace evosteer
