#include <doctest.h>

#include <string>

#include "evosteer/config.hpp"
#include "test_helpers.hpp"

using namespace evosteer;
using doctest::Approx;

namespace {

const std::string kHead = "schema = evosteer/1\n";

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "cfg");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_config(kHead);
  CHECK(c.horizon == 1.0);
  CHECK(c.modes == 32);
  CHECK(c.grid_points == 513);
  CHECK(c.p == 2.0);
  CHECK(c.lambdas.size() == 5u);
  CHECK(c.effective_window() == Approx(std::log(1e12)));
  CHECK(c.linear_case());
}

TEST_CASE("sections, comments and lists") {
  const RunConfig c = parse_config(kHead +
                                   "[model]\nmodes = 8 # trailing\ngrid = 65\np = 3\n"
                                   "[phase]\nwindow = 2.5\ndelay = 0.2\n"
                                   "[impulses]\ntimes = 0.25, 0.75\ncoefficients = 1, -1\nsources = 2, 0\nresponses = 1, 3\n"
                                   "[control]\nlambdas = 0.5, 0.05\n"
                                   "[target]\nmodes = 1:0.5, 4:-2\n"
                                   "[selection]\npolicy = seeded_random\n[solver]\nseed = 11\n",
                                   "cfg");
  CHECK(c.modes == 8);
  CHECK(c.p == 3.0);
  CHECK(c.window == 2.5);
  CHECK(c.effective_window() == 2.5);
  CHECK(c.impulses.impulses.size() == 2u);
  CHECK(c.impulses.impulses[1].coefficient == -1.0);
  CHECK(c.impulses.impulses[1].source.frequency == 0);
  CHECK(c.impulses.impulses[1].response.frequency == 3);
  CHECK(c.target.modes == std::vector<std::pair<int, double>>{{1, 0.5}, {4, -2.0}});
  CHECK(c.policy.kind == SelectionKind::SeededRandom);
  CHECK(c.policy.seed == 11u);
  CHECK(c.seed == 11u);
  CHECK_FALSE(c.linear_case());
}

TEST_CASE("errors carry source, line and key") {
  const std::string unknown = message_of(kHead + "[model]\nmodes = 8\nstepz = 4\n");
  CHECK(contains(unknown, "cfg:4"));
  CHECK(contains(unknown, "model.stepz"));

  CHECK(contains(message_of(kHead + "[model]\nmodes = 8\nmodes = 9\n"), "cfg:4"));
  CHECK(contains(message_of("[model]\nmodes = 8\n"), "schema"));
  CHECK(contains(message_of("schema = evosteer/2\n"), "schema"));
  CHECK(contains(message_of(kHead + "[model]\np = 1\n"), "model.p"));
  CHECK(contains(message_of(kHead + "[model]\np = 1\n"), "cfg:3"));
  CHECK(contains(message_of(kHead + "[model]\nmodes = eight\n"), "model.modes"));
  CHECK(contains(message_of(kHead + "[model]\nmodes = 200\ngrid = 129\n"), "model.modes"));
  CHECK(contains(message_of(kHead + "[control]\nlambdas = 0.01, 0.1\n"), "control.lambdas"));
  CHECK(contains(message_of(kHead + "[control]\nlambdas = 0.1, -0.01\n"), "control.lambdas"));
  CHECK(contains(message_of(kHead + "[inclusion]\nenvelope = cubic\n"), "inclusion.envelope"));
  CHECK(contains(message_of(kHead + "[target]\nmodes = 40:1\n"), "target.modes"));
  CHECK(contains(message_of(kHead + "[target]\nmodes = 3-1\n"), "target.modes"));
  CHECK(contains(message_of(kHead + "[model]\ngrid = 9\nmodes = 2\n[target]\nsamples = 1, 2\n"),
                 "target.samples"));
  CHECK(contains(message_of(kHead + "[impulses]\ntimes = 0.2, 0.4\ncoefficients = 1\n"), "impulses.times"));
  CHECK(contains(message_of(kHead + "[impulses]\ntimes = 0.2\nsources = 1.5\n"), "impulses.sources"));
  CHECK(contains(message_of(kHead + "[inclusion]\nbeta = 0.5\nbeta_amplitude = 1\n"), "inclusion.beta"));
  CHECK(contains(message_of(kHead + "[selection]\npolicy = convex_mix\nmix = 2\n"), "selection.mix"));
  CHECK(contains(message_of(kHead + "[phase]\nwindow = 0.05\n"), "phase.window"));
  CHECK(contains(message_of(kHead + "[solver]\nrelaxation = 0\n"), "solver.relaxation"));
  CHECK(contains(message_of(kHead + "modes = 8\n"), "modes"));
  CHECK(contains(message_of(kHead + "[model\n"), "cfg:2"));
}

TEST_CASE("problem assembly") {
  const RunConfig c = parse_config(kHead +
                                   "[model]\nmodes = 8\ngrid = 129\nsteps = 100\n"
                                   "[impulses]\ntimes = 0.454\n[target]\nmodes = 2:1.5\n",
                                   "cfg");
  const SteeringProblem pr = build_problem(c);
  CHECK(pr.impulse_nodes == std::vector<int>{45});
  CHECK(pr.impulses.impulses[0].time == Approx(0.45));
  CHECK(pr.target_modes().coeffs[1] == Approx(1.5).epsilon(1e-12));
  CHECK(pr.target_modes().coeffs[0] == Approx(0.0).epsilon(1e-12));
  CHECK(pr.history_window == Approx(std::log(1e12)));

  const RunConfig edge = parse_config(kHead + "[model]\nsteps = 100\n[impulses]\ntimes = 1.0\n", "cfg");
  try {
    build_problem(edge);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
    CHECK(contains(e.what(), "impulses.times"));
    CHECK(contains(e.what(), "cfg:5"));
  }
}

TEST_CASE("shipped configurations load") {
  for (const char* name : {"default.cfg", "linear_e3.cfg", "impulsive.cfg", "bzero.cfg"}) {
    CAPTURE(name);
    const RunConfig c = load_config(std::string(EVOSTEER_CONFIG_DIR) + "/" + name);
    CHECK_NOTHROW(build_problem(c));
  }
  CHECK(load_config(std::string(EVOSTEER_CONFIG_DIR) + "/linear_e3.cfg").linear_case());
  CHECK_FALSE(load_config(std::string(EVOSTEER_CONFIG_DIR) + "/impulsive.cfg").linear_case());
  CHECK_ERROR_KIND(load_config("/nonexistent/evosteer.cfg"), ErrorKind::Configuration);
}

TEST_CASE("solver options follow the configuration") {
  const RunConfig c =
      parse_config(kHead + "[solver]\ngamma_tol = 1e-6\ngamma_max_iter = 7\nrelaxation = 0.5\nnewton_tol = 1e-9\n");
  const GammaOptions g = gamma_options(c);
  CHECK(g.tolerance == 1e-6);
  CHECK(g.max_iterations == 7);
  CHECK(g.relaxation == 0.5);
  CHECK(g.resolvent.tolerance == 1e-9);
  CHECK(resolvent_options(c).tolerance == 1e-9);
}
