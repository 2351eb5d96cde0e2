#include "evosteer/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "evosteer/error.hpp"

namespace evosteer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    const std::string where =
        it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw Error(ErrorKind::Configuration, where + ": " + key + ": " + message);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const std::string* raw(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second.value;
  }

  double number(const std::string& key, double fallback) {
    const std::string* v = raw(key);
    return v ? parse_double(key, *v) : fallback;
  }

  long integer(const std::string& key, long fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    long out = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) fail(key, "expected an integer, got '" + *v + "'");
    return out;
  }

  std::string word(const std::string& key, const std::string& fallback) {
    const std::string* v = raw(key);
    return v ? *v : fallback;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v, ',')) out.push_back(parse_double(key, item));
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) fail(key, "unknown key");
    }
  }

  std::map<std::string, int> lines() const {
    std::map<std::string, int> out;
    for (const auto& [key, entry] : entries_) out[key] = entry.line;
    return out;
  }

 private:
  double parse_double(const std::string& key, const std::string& text) const {
    double out = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(out)) {
      fail(key, "expected a finite number, got '" + text + "'");
    }
    return out;
  }

  std::map<std::string, Entry> entries_;
  std::string source_;
  std::set<std::string> used_;
};

[[noreturn]] void config_error(const RunConfig& c, const std::string& key, const std::string& msg) {
  const auto it = c.lines.find(key);
  const std::string where =
      it == c.lines.end() ? c.source : c.source + ":" + std::to_string(it->second);
  throw Error(ErrorKind::Configuration, where + ": " + key + ": " + msg);
}

template <typename T, typename Table>
T enum_from(Reader& r, const std::string& key, const std::string& fallback, const Table& table) {
  const std::string v = r.word(key, fallback);
  for (const auto& [name, value] : table) {
    if (v == name) return value;
  }
  std::string names;
  for (const auto& [name, value] : table) names += (names.empty() ? "" : ", ") + std::string(name);
  r.fail(key, "unknown value '" + v + "' (expected one of " + names + ")");
}

}  // namespace

double RunConfig::effective_window() const {
  return window > 0.0 ? window : history_window(delay, kernel_rate, tail_tol);
}

bool RunConfig::linear_case() const {
  return p == 2.0 && impulses.impulses.empty() &&
         (inclusion.envelope.kind == EnvelopeKind::Zero ||
          (inclusion.weight.base == 0.0 && inclusion.weight.amplitude == 0.0));
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Configuration, where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw Error(ErrorKind::Configuration, where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Configuration, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Configuration, where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (entries.count(full)) {
      throw Error(ErrorKind::Configuration, where + ": duplicate key " + full + " (first on line " +
                                                std::to_string(entries[full].line) + ")");
    }
    entries[full] = {value, number};
  }

  Reader r(std::move(entries), source);
  RunConfig c;
  c.source = source;
  c.lines = r.lines();

  const std::string schema = r.word("schema", "");
  if (schema != kConfigSchema) {
    r.fail("schema", "expected schema tag '" + std::string(kConfigSchema) + "', got '" + schema + "'");
  }

  c.horizon = r.number("model.horizon", c.horizon);
  c.modes = static_cast<int>(r.integer("model.modes", c.modes));
  c.grid_points = static_cast<int>(r.integer("model.grid", c.grid_points));
  c.p = r.number("model.p", c.p);
  c.steps = static_cast<int>(r.integer("model.steps", c.steps));

  const auto kind = enum_from<CoefficientKind>(
      r, "coefficient.kind", "constant",
      std::vector<std::pair<const char*, CoefficientKind>>{{"constant", CoefficientKind::Constant},
                                                           {"affine", CoefficientKind::Affine},
                                                           {"table", CoefficientKind::Table}});
  switch (kind) {
    case CoefficientKind::Constant:
      c.coefficient = CoefficientSpec::constant(r.number("coefficient.value", 1.0));
      break;
    case CoefficientKind::Affine:
      c.coefficient = CoefficientSpec::affine(r.number("coefficient.value", 1.0),
                                              r.number("coefficient.slope", 0.0));
      break;
    case CoefficientKind::Table: {
      auto times = r.numbers("coefficient.times", {});
      auto values = r.numbers("coefficient.values", {});
      if (times.size() != values.size() || times.size() < 2) {
        r.fail("coefficient.values", "table needs >= 2 values matching coefficient.times");
      }
      c.coefficient = CoefficientSpec::table(std::move(times), std::move(values));
      break;
    }
  }
  c.coefficient.holder_order = r.number("coefficient.holder_order", c.coefficient.holder_order);
  c.coefficient.holder_const = r.number("coefficient.holder_const", c.coefficient.holder_const);

  c.kernel_rate = r.number("phase.rate", c.kernel_rate);
  c.delay = r.number("phase.delay", c.delay);
  if (const std::string* w = r.raw("phase.window"); w && *w != "auto") {
    c.window = std::stod(*w);
  }
  c.history_spacing = r.number("phase.spacing", c.history_spacing);

  c.history.kind = enum_from<HistoryKind>(
      r, "history.kind", "zero",
      std::vector<std::pair<const char*, HistoryKind>>{{"zero", HistoryKind::Zero},
                                                       {"constant", HistoryKind::Constant},
                                                       {"mode", HistoryKind::Mode}});
  c.history.amplitude = r.number("history.amplitude", 0.0);
  c.history.mode = static_cast<int>(r.integer("history.mode", 1));
  c.history.decay = r.number("history.decay", 0.0);

  c.inclusion.envelope.kind = enum_from<EnvelopeKind>(
      r, "inclusion.envelope", "zero",
      std::vector<std::pair<const char*, EnvelopeKind>>{{"zero", EnvelopeKind::Zero},
                                                        {"constant", EnvelopeKind::Constant},
                                                        {"tanh", EnvelopeKind::Tanh}});
  c.inclusion.envelope.level = r.number("inclusion.level", 0.0);
  c.inclusion.envelope.width = r.number("inclusion.width", 0.0);
  c.inclusion.weight.base = r.number("inclusion.beta", 1.0);
  c.inclusion.weight.amplitude = r.number("inclusion.beta_amplitude", 0.0);
  c.inclusion.weight.frequency = r.number("inclusion.beta_frequency", 0.0);

  c.policy.kind = enum_from<SelectionKind>(
      r, "selection.policy", "midpoint",
      std::vector<std::pair<const char*, SelectionKind>>{
          {"lower", SelectionKind::Lower},
          {"upper", SelectionKind::Upper},
          {"midpoint", SelectionKind::Midpoint},
          {"convex_mix", SelectionKind::ConvexMix},
          {"seeded_random", SelectionKind::SeededRandom}});
  c.policy.mix = r.number("selection.mix", 0.5);
  c.policy.mix_slope = r.number("selection.mix_slope", 0.0);

  const auto times = r.numbers("impulses.times", {});
  const auto coeffs = r.numbers("impulses.coefficients", std::vector<double>(times.size(), 0.0));
  const auto sources = r.numbers("impulses.sources", std::vector<double>(times.size(), 1.0));
  const auto responses = r.numbers("impulses.responses", std::vector<double>(times.size(), 1.0));
  if (coeffs.size() != times.size() || sources.size() != times.size() ||
      responses.size() != times.size()) {
    r.fail("impulses.times", "impulse lists must all have the same length");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto as_frequency = [&](double v, const char* key) {
      if (v < 0 || v != std::floor(v)) r.fail(key, "kernel factor frequency must be a nonnegative integer");
      return KernelFactor{static_cast<int>(v)};
    };
    c.impulses.impulses.push_back({times[k], coeffs[k], as_frequency(sources[k], "impulses.sources"),
                                   as_frequency(responses[k], "impulses.responses")});
  }

  c.input_gain = r.number("control.input_gain", c.input_gain);
  c.lambdas = r.numbers("control.lambdas", c.lambdas);
  c.uc_samples = static_cast<int>(r.integer("control.uc_samples", c.uc_samples));
  c.uc_floor = r.number("control.uc_floor", c.uc_floor);

  if (const std::string* m = r.raw("target.modes")) {
    for (const auto& item : split(*m, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) r.fail("target.modes", "entries must be n:coefficient");
      try {
        c.target.modes.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      } catch (const std::exception&) {
        r.fail("target.modes", "cannot parse entry '" + item + "'");
      }
    }
  }
  c.target.samples = r.numbers("target.samples", {});

  c.quadrature_tol = r.number("solver.quadrature_tol", c.quadrature_tol);
  c.newton_tol = r.number("solver.newton_tol", c.newton_tol);
  c.newton_max_iter = static_cast<int>(r.integer("solver.newton_max_iter", c.newton_max_iter));
  c.gamma_tol = r.number("solver.gamma_tol", c.gamma_tol);
  c.gamma_max_iter = static_cast<int>(r.integer("solver.gamma_max_iter", c.gamma_max_iter));
  c.relaxation = r.number("solver.relaxation", c.relaxation);
  c.tail_tol = r.number("solver.tail_tol", c.tail_tol);
  c.seed = static_cast<std::uint64_t>(r.integer("solver.seed", 0));
  c.policy.seed = c.seed;

  r.reject_unknown();
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate(const RunConfig& c) {
  if (!(c.p > 1.0) || !std::isfinite(c.p)) config_error(c, "model.p", "exponent must lie in (1, inf)");
  if (!(c.horizon > 0.0)) config_error(c, "model.horizon", "must be positive");
  if (c.grid_points < 4) config_error(c, "model.grid", "need at least 4 grid points");
  if (c.modes < 2) config_error(c, "model.modes", "need at least 2 modes");
  if (2 * c.modes > c.grid_points) config_error(c, "model.modes", "modes must not exceed grid/2");
  if (c.steps < 2) config_error(c, "model.steps", "need at least 2 time steps");
  try {
    c.coefficient.validate(c.horizon);
  } catch (const Error& e) {
    config_error(c, "coefficient.kind", e.what());
  }
  if (!(c.kernel_rate > 0.0)) config_error(c, "phase.rate", "kernel rate must be positive");
  if (!(c.delay > 0.0)) config_error(c, "phase.delay", "delay must be positive");
  if (c.window < 0.0 || (c.window > 0.0 && c.window < c.delay)) {
    config_error(c, "phase.window", "window must be auto or at least the delay");
  }
  if (!(c.history_spacing > 0.0)) config_error(c, "phase.spacing", "must be positive");
  if (c.history.kind == HistoryKind::Mode && (c.history.mode < 1 || c.history.decay < 0.0)) {
    config_error(c, "history.mode", "mode must be >= 1 and decay >= 0");
  }
  if (c.inclusion.envelope.width < 0.0) config_error(c, "inclusion.width", "must be nonnegative");
  if (c.inclusion.weight.base < std::abs(c.inclusion.weight.amplitude)) {
    config_error(c, "inclusion.beta", "beta(t) must stay nonnegative (beta >= |beta_amplitude|)");
  }
  if (c.policy.kind == SelectionKind::ConvexMix && (c.policy.mix < 0.0 || c.policy.mix > 1.0)) {
    config_error(c, "selection.mix", "must lie in [0, 1]");
  }
  if (c.lambdas.empty()) config_error(c, "control.lambdas", "need at least one lambda");
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
    if (!(c.lambdas[i] > 0.0)) config_error(c, "control.lambdas", "lambda values must be positive");
    if (i > 0 && !(c.lambdas[i] < c.lambdas[i - 1])) {
      config_error(c, "control.lambdas", "lambda values must be sorted strictly descending");
    }
  }
  if (c.uc_samples < c.modes) config_error(c, "control.uc_samples", "need at least N samples");
  if (!(c.uc_floor >= 0.0)) config_error(c, "control.uc_floor", "must be nonnegative");
  for (const auto& [n, v] : c.target.modes) {
    if (n < 1 || n > c.modes) config_error(c, "target.modes", "mode index out of range 1..N");
  }
  if (!c.target.modes.empty() && !c.target.samples.empty()) {
    config_error(c, "target.samples", "give either target.modes or target.samples");
  }
  if (!c.target.samples.empty() && static_cast<int>(c.target.samples.size()) != c.grid_points) {
    config_error(c, "target.samples", "need exactly model.grid samples");
  }
  for (const char* key : {"solver.quadrature_tol", "solver.newton_tol", "solver.gamma_tol", "solver.tail_tol"}) {
    const double v = std::string(key) == "solver.quadrature_tol" ? c.quadrature_tol
                     : std::string(key) == "solver.newton_tol"   ? c.newton_tol
                     : std::string(key) == "solver.gamma_tol"    ? c.gamma_tol
                                                                 : c.tail_tol;
    if (!(v > 0.0 && v < 1.0)) config_error(c, key, "tolerance must lie in (0, 1)");
  }
  if (c.newton_max_iter < 1) config_error(c, "solver.newton_max_iter", "must be positive");
  if (c.gamma_max_iter < 1) config_error(c, "solver.gamma_max_iter", "must be positive");
  if (!(c.relaxation > 0.0 && c.relaxation <= 1.0)) config_error(c, "solver.relaxation", "must lie in (0, 1]");
}

SteeringProblem build_problem(const RunConfig& c) {
  validate(c);
  const GridPtr grid = SpatialGrid::make(c.grid_points);
  SineBasis basis(grid, c.modes);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(c.grid_points);
  if (!c.target.samples.empty()) {
    target = Eigen::Map<const Eigen::VectorXd>(c.target.samples.data(), c.grid_points);
  }
  for (const auto& [n, v] : c.target.modes) target += v * eigenfunction(*grid, n);

  SteeringProblem problem(EvolutionFamily(c.coefficient, c.horizon, c.modes), std::move(basis),
                          InputOperator(c.modes, c.input_gain), TimeGrid(c.horizon, c.steps), c.p,
                          StateVector(grid, std::move(target), c.p));
  problem.history = c.history;
  problem.kernel_rate = c.kernel_rate;
  problem.history_window = c.effective_window();
  problem.history_spacing = c.history_spacing;
  problem.inclusion = c.inclusion;
  problem.inclusion.delay = c.delay;
  problem.policy = c.policy;
  problem.impulses = c.impulses;
  try {
    problem.impulse_nodes = problem.impulses.snap(problem.grid);
  } catch (const Error& e) {
    config_error(c, "impulses.times", e.what());
  }
  return problem;
}

GammaOptions gamma_options(const RunConfig& c) {
  GammaOptions o;
  o.tolerance = c.gamma_tol;
  o.max_iterations = c.gamma_max_iter;
  o.relaxation = c.relaxation;
  o.resolvent = resolvent_options(c);
  return o;
}

ResolventOptions resolvent_options(const RunConfig& c) {
  ResolventOptions o;
  o.tolerance = c.newton_tol;
  o.max_iterations = c.newton_max_iter;
  return o;
}

}  // namespace evosteer
