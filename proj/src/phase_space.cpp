#include "evosteer/phase_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

constexpr double kSlack = 1e-12;

constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

StateVector blend(const StateVector& a, const StateVector& b, double w) {
  return StateVector(a.grid(), (1.0 - w) * a.values() + w * b.values(), a.p());
}

// Piecewise-linear norm profile over the stamps, held constant below the first stamp.
struct NormProfile {
  std::vector<double> times;
  std::vector<double> values;

  double at(double theta) const {
    if (theta <= times.front()) return values.front();
    const auto it = std::lower_bound(times.begin(), times.end(), theta);
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (i >= times.size()) return values.back();
    if (times[i] == theta) return values[i];
    const double w = (theta - times[i - 1]) / (times[i] - times[i - 1]);
    return (1.0 - w) * values[i - 1] + w * values[i];
  }

  // Visits linear panels [a, b] with endpoint values (na, nb) covering [lo, 0].
  template <typename F>
  void for_each_panel(double lo, const F& visit) const {
    if (lo < times.front()) visit(lo, times.front(), values.front(), values.front());
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      double a = times[i];
      double b = times[i + 1];
      if (b <= lo || b == a) continue;
      double na = values[i];
      const double nb = values[i + 1];
      if (a < lo) {
        na = at(lo);
        a = lo;
      }
      visit(a, b, na, nb);
    }
  }
};

NormProfile profile_of(const HistorySegment& psi) { return {psi.times(), psi.sample_norms()}; }

// int_a^b e^{nu theta} dtheta and int_a^b (theta - a) e^{nu theta} dtheta.
std::pair<double, double> exponential_moments(double a, double b, double nu) {
  const double len = b - a;
  const double x = nu * len;
  const double ea = std::exp(nu * a);
  const double m0 = ea * std::expm1(x) / nu;
  double tail;  // x e^x - (e^x - 1) = sum_{k>=2} (k-1) x^k / k!
  if (x < 0.1) {
    tail = 0.0;
    double term = x;  // x^k / k! at k = 1
    for (int k = 2; k < 30; ++k) {
      term *= x / k;
      tail += (k - 1) * term;
      if (term < 1e-18 * tail) break;
    }
  } else {
    tail = x * std::exp(x) - std::expm1(x);
  }
  const double m1 = ea * tail / (nu * nu);
  return {m0, m1};
}

}  // namespace

HistorySegment::HistorySegment(std::vector<double> times, std::vector<StateVector> states,
                               double window, double rate)
    : times_(std::move(times)), states_(std::move(states)), window_(window), rate_(rate) {
  if (times_.empty() || times_.size() != states_.size()) {
    throw Error(ErrorKind::InvalidInput, "history segment needs matching stamps and states");
  }
  if (!(window_ > 0.0) || !(rate_ > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "history window and kernel rate must be positive");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (times_[i] < times_[i - 1]) throw Error(ErrorKind::InvalidInput, "history stamps must be nondecreasing");
  }
  if (std::abs(times_.back()) > kSlack || times_.front() < -window_ * (1.0 + kSlack)) {
    throw Error(ErrorKind::Window, "history stamps must lie in [-H, 0] and end at 0");
  }
  times_.back() = 0.0;
}

StateVector HistorySegment::at(double theta) const {
  if (theta > kSlack || theta < -window_ * (1.0 + kSlack) - kSlack) {
    throw Error(ErrorKind::Window, "theta=" + std::to_string(theta) + " outside [-H, 0]");
  }
  if (theta <= times_.front()) return states_.front();
  const auto it = std::lower_bound(times_.begin(), times_.end(), theta);
  const auto i = static_cast<std::size_t>(it - times_.begin());
  if (i >= times_.size()) return states_.back();
  if (times_[i] == theta) return states_[i];
  const double w = (theta - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return blend(states_[i - 1], states_[i], w);
}

std::vector<double> HistorySegment::sample_norms() const {
  std::vector<double> norms;
  norms.reserve(states_.size());
  for (const auto& s : states_) norms.push_back(lp_norm(s));
  return norms;
}

ModeVector PiecewiseTrajectory::at(double t) const {
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  const auto i = static_cast<std::size_t>(it - times.begin());
  if (times[i] == t) return states[i];
  const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return ModeVector((1.0 - w) * right[i - 1].coeffs + w * states[i].coeffs);
}

ModeVector PiecewiseTrajectory::right_at(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it != times.end() && *it == t) return right[static_cast<std::size_t>(it - times.begin())];
  return at(t);
}

StateVector HistorySpec::value_at(double theta, const GridPtr& grid, double p) const {
  switch (kind) {
    case HistoryKind::Zero: return StateVector::zero(grid, p);
    case HistoryKind::Constant: return StateVector::constant(grid, amplitude, p);
    case HistoryKind::Mode:
      return StateVector(grid, amplitude * std::exp(decay * theta) * eigenfunction(*grid, mode), p);
  }
  return StateVector::zero(grid, p);
}

double history_window(double delay, double rate, double tail_tolerance) {
  if (!(rate > 0.0) || !(tail_tolerance > 0.0 && tail_tolerance < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "kernel rate and tail tolerance out of range");
  }
  return std::max(delay, std::log(1.0 / tail_tolerance) / rate);
}

HistorySegment sample_history(const HistorySpec& spec, const GridPtr& grid, double p,
                              double rate, double window, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidInput, "history spacing must be positive");
  const int panels = std::max(1, static_cast<int>(std::ceil(window / spacing)));
  std::vector<double> times(panels + 1);
  std::vector<StateVector> states;
  states.reserve(panels + 1);
  for (int i = 0; i <= panels; ++i) {
    times[i] = -window + window * i / panels;
    if (i == panels) times[i] = 0.0;
    states.push_back(spec.value_at(times[i], grid, p));
  }
  return HistorySegment(std::move(times), std::move(states), window, rate);
}

double segment_norm(const HistorySegment& psi, double r) {
  if (r < 0.0) throw Error(ErrorKind::InvalidInput, "segment length must be nonnegative");
  if (r > psi.window() * (1.0 + kSlack)) {
    throw Error(ErrorKind::Window, "r=" + std::to_string(r) + " exceeds window H=" +
                                       std::to_string(psi.window()));
  }
  if (r == 0.0) return 0.0;
  double sum = 0.0;
  profile_of(psi).for_each_panel(-r, [&](double a, double b, double na, double nb) {
    sum += 0.5 * (b - a) * (na + nb);
  });
  return sum;
}

namespace {

double bg_norm_of(const NormProfile& profile, double window, double nu) {
  double sum = 0.0;
  profile.for_each_panel(-window, [&](double a, double b, double na, double nb) {
    const auto [m0, m1] = exponential_moments(a, b, nu);
    sum += na * m0 + (nb - na) / (b - a) * m1;
  });
  return sum / nu;
}

}  // namespace

double bg_norm(const HistorySegment& psi) {
  return bg_norm_of(profile_of(psi), psi.window(), psi.rate());
}

double bg_norm_double_integral(const HistorySegment& psi) {
  const double nu = psi.rate();
  const double lo = -psi.window();
  struct Panel {
    double a, b, na, nb;
  };
  std::vector<Panel> panels;
  profile_of(psi).for_each_panel(lo, [&](double a, double b, double na, double nb) {
    panels.push_back({a, b, na, nb});
  });
  // Inner integral S(s) = int_s^0 ||psi||, accumulated from theta = 0 downwards.
  double upper_mass = 0.0;
  double total = 0.0;
  for (auto it = panels.rbegin(); it != panels.rend(); ++it) {
    const Panel& pn = *it;
    const double slope = (pn.nb - pn.na) / (pn.b - pn.a);
    const auto inner = [&](double s) {
      const double ns = pn.na + slope * (s - pn.a);
      return upper_mass + 0.5 * (pn.b - s) * (ns + pn.nb);
    };
    const double mid = 0.5 * (pn.a + pn.b);
    const double half = 0.5 * (pn.b - pn.a);
    double panel = 0.0;
    for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
      const double s = mid + half * kGaussNodes[k];
      panel += kGaussWeights[k] * std::exp(nu * s) * inner(s);
    }
    total += half * panel;
    upper_mass += 0.5 * (pn.b - pn.a) * (pn.na + pn.nb);
  }
  // s < -H: ||psi||_{[s,0]} = ||psi||_{[-H,0]}.
  total += upper_mass * std::exp(nu * lo) / nu;
  return total;
}

HistorySegment shift_segment(const PiecewiseTrajectory& x, const SineBasis& basis,
                             const HistorySegment& phi, double t) {
  if (t < -kSlack || t > x.horizon() * (1.0 + kSlack)) {
    throw Error(ErrorKind::Domain, "t=" + std::to_string(t) + " outside [0, T]");
  }
  t = std::clamp(t, 0.0, x.horizon());
  const double window = phi.window();
  const double p = phi.states().front().p();
  const auto state = [&](const ModeVector& c) { return basis.from_modes(c, p); };

  std::vector<double> stamps;
  std::vector<StateVector> values;
  const auto push = [&](double theta, StateVector v) {
    stamps.push_back(std::min(theta, 0.0));
    values.push_back(std::move(v));
  };

  const double start = t - window;
  if (start < 0.0) {
    push(-window, phi.at(start));
    for (std::size_t i = 0; i < phi.times().size(); ++i) {
      if (phi.times()[i] > start) push(phi.times()[i] - t, phi.states()[i]);
    }
  } else {
    push(-window, state(x.at(start)));
  }
  if (t > 0.0) {
    const auto impulse = [&](int j) {
      return std::find(x.impulse_nodes.begin(), x.impulse_nodes.end(), j) != x.impulse_nodes.end();
    };
    for (int j = 0; j < x.nodes(); ++j) {
      const double tj = x.times[j];
      if (tj <= start) continue;
      if (tj > t) break;
      push(tj - t, state(x.states[j]));
      if (impulse(j) && tj < t) push(tj - t, state(x.right[j]));
    }
    if (stamps.back() < 0.0) push(0.0, state(x.at(t)));
  }
  return HistorySegment(std::move(stamps), std::move(values), window, phi.rate());
}

GrowthBoundReport check_growth_bound(const PiecewiseTrajectory& x, const SineBasis& basis,
                                     const HistorySegment& phi, double t, double tolerance) {
  GrowthBoundReport report;
  report.t = t;
  const double p = phi.states().front().p();
  report.lhs = bg_norm(shift_segment(x, basis, phi, t));
  double sup = basis.state_norm(x.at(t), p);
  for (int j = 0; j < x.nodes() && x.times[j] <= t; ++j) {
    sup = std::max(sup, basis.state_norm(x.states[j], p));
    if (x.times[j] < t) sup = std::max(sup, basis.state_norm(x.right[j], p));
  }
  report.rhs = bg_norm(phi) + t / phi.rate() * sup;
  report.holds = report.lhs <= report.rhs * (1.0 + tolerance) + tolerance;
  return report;
}

GrowthBoundChecker::GrowthBoundChecker(const PiecewiseTrajectory& x, const SineBasis& basis,
                                       const HistorySegment& phi)
    : x_(x), basis_(basis), phi_(phi), p_(phi.states().front().p()) {
  phi_bg_norm_ = bg_norm(phi_);
  phi_norms_ = phi_.sample_norms();
  left_norms_.reserve(x_.nodes());
  right_norms_.reserve(x_.nodes());
  impulse_.assign(x_.nodes(), false);
  for (int j = 0; j < x_.nodes(); ++j) {
    left_norms_.push_back(basis_.state_norm(x_.states[j], p_));
    right_norms_.push_back(basis_.state_norm(x_.right[j], p_));
  }
  for (int j : x_.impulse_nodes) impulse_[j] = true;
}

GrowthBoundReport GrowthBoundChecker::check(double t, double tolerance) const {
  if (t < -kSlack || t > x_.horizon() * (1.0 + kSlack)) {
    throw Error(ErrorKind::Domain, "t=" + std::to_string(t) + " outside [0, T]");
  }
  t = std::clamp(t, 0.0, x_.horizon());
  const double window = phi_.window();
  NormProfile profile;
  const auto push = [&](double theta, double n) {
    profile.times.push_back(std::min(theta, 0.0));
    profile.values.push_back(n);
  };
  const double start = t - window;
  if (start < 0.0) {
    push(-window, lp_norm(phi_.at(start)));
    for (std::size_t i = 0; i < phi_.times().size(); ++i) {
      if (phi_.times()[i] > start) push(phi_.times()[i] - t, phi_norms_[i]);
    }
  } else {
    push(-window, basis_.state_norm(x_.at(start), p_));
  }
  const double end_norm = basis_.state_norm(x_.at(t), p_);
  double sup = end_norm;
  if (t > 0.0) {
    for (int j = 0; j < x_.nodes(); ++j) {
      const double tj = x_.times[j];
      if (tj > t) break;
      sup = std::max(sup, left_norms_[j]);
      if (tj < t) sup = std::max(sup, right_norms_[j]);
      if (tj <= start) continue;
      push(tj - t, left_norms_[j]);
      if (impulse_[j] && tj < t) push(tj - t, right_norms_[j]);
    }
    if (profile.times.back() < 0.0) push(0.0, end_norm);
  }
  GrowthBoundReport report;
  report.t = t;
  report.lhs = bg_norm_of(profile, window, phi_.rate());
  report.rhs = phi_bg_norm_ + t / phi_.rate() * sup;
  report.holds = report.lhs <= report.rhs * (1.0 + tolerance) + tolerance;
  return report;
}

}  // namespace evosteer
