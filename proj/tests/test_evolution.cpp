#include <doctest.h>

#include <cmath>

#include "evosteer/evolution.hpp"
#include "test_helpers.hpp"

using namespace evosteer;
using doctest::Approx;

TEST_CASE("mu closed forms") {
  const EvolutionFamily one(CoefficientSpec::constant(1.0), 1.0, 8);
  CHECK(one.mu(0.0, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(one.mu(0.3, 0.3) == 0.0);
  const EvolutionFamily affine(CoefficientSpec::affine(1.0, 0.5), 1.0, 8);
  CHECK(affine.mu(0.0, 1.0) == Approx(1.25).epsilon(1e-15));
  CHECK(affine.mu(0.2, 0.7) + affine.mu(0.7, 0.9) == Approx(affine.mu(0.2, 0.9)).epsilon(1e-12));
  CHECK_ERROR_KIND(one.mu(0.6, 0.5), ErrorKind::Ordering);
  CHECK_ERROR_KIND(one.mu(0.0, 1.5), ErrorKind::Domain);
}

TEST_CASE("table coefficient integrates its interpolant") {
  // a = 1 on [0, 0.5], rising linearly to 3 at t = 1.
  CoefficientSpec a = CoefficientSpec::table({0.0, 0.5, 1.0}, {1.0, 1.0, 3.0});
  a.holder_const = 4.0;
  CHECK_NOTHROW(a.validate(1.0));
  const EvolutionFamily U(a, 1.0, 4);
  CHECK(U.mu(0.0, 1.0) == Approx(0.5 + 1.0).epsilon(1e-13));
  CHECK(U.mu(0.25, 0.75) == Approx(0.25 + 0.25 * 1.5).epsilon(1e-13));
  CHECK(a.value(2.0) == 3.0);
}

TEST_CASE("coefficient validation") {
  CHECK_ERROR_KIND(CoefficientSpec::constant(-1.0).validate(1.0), ErrorKind::InvalidInput);
  CHECK_ERROR_KIND(CoefficientSpec::affine(1.0, -2.0).validate(1.0), ErrorKind::InvalidInput);
  CoefficientSpec tight = CoefficientSpec::affine(1.0, 1.0);
  tight.holder_const = 0.5;
  CHECK_ERROR_KIND(tight.validate(1.0), ErrorKind::InvalidInput);
  CoefficientSpec sqrtlike = CoefficientSpec::table({0.0, 0.01, 1.0}, {1.0, 1.1, 1.1});
  sqrtlike.holder_order = 0.5;
  sqrtlike.holder_const = 1.5;
  CHECK_NOTHROW(sqrtlike.validate(1.0));
}

TEST_CASE("evolution operator examples") {
  const EvolutionFamily U(CoefficientSpec::constant(1.0), 1.0, 32);
  const ModeVector e1 = ModeVector::unit(32, 1);
  CHECK(U.apply(1.0, 0.0, e1).coeffs[0] == Approx(0.3678794).epsilon(1e-7));
  CHECK(U.apply_adjoint(1.0, 0.0, ModeVector::unit(32, 2)).coeffs[1] == Approx(0.0183156).epsilon(1e-6));
  std::mt19937_64 rng(1);
  const ModeVector f(random_vector(rng, 32));
  CHECK((U.apply(0.4, 0.4, f).coeffs.array() == f.coeffs.array()).all());
  CHECK((U.apply_adjoint(0.4, 0.4, f).coeffs.array() == f.coeffs.array()).all());
  const ModeVector two = U.apply(1.0, 0.5, U.apply(0.5, 0.0, f));
  CHECK((two.coeffs - U.apply(1.0, 0.0, f).coeffs).norm() <= 1e-12 * f.coeffs.norm());
  CHECK(U.apply(1.0, 0.0, f).coeffs.norm() <= f.coeffs.norm());
  CHECK_ERROR_KIND(U.apply(0.2, 0.5, f), ErrorKind::Ordering);
}

TEST_CASE("compactness profile") {
  const EvolutionFamily U(CoefficientSpec::constant(1.0), 1.0, 32);
  const CompactnessProfile unit = U.compactness_profile(1.0, 0.0);
  CHECK(unit.compact);
  for (int n = 1; n <= 4; ++n) CHECK(unit.multipliers[n - 1] == Approx(std::exp(-n * n)).epsilon(1e-14));
  for (int n = 1; n < 20; ++n) CHECK(unit.multipliers[n] < unit.multipliers[n - 1]);
  for (int n = 20; n < 32; ++n) CHECK(unit.multipliers[n] <= unit.multipliers[n - 1]);
  const CompactnessProfile flat = U.compactness_profile(0.5, 0.5);
  CHECK_FALSE(flat.compact);
  CHECK(flat.multipliers.minCoeff() == 1.0);
  CHECK(U.compactness_profile(0.55, 0.5).multipliers[31] < 1e-12);
}

TEST_CASE("strong continuity proxy") {
  const EvolutionFamily U(CoefficientSpec::affine(1.0, 0.5), 1.0, 16);
  Eigen::VectorXd smooth(16);
  for (int n = 1; n <= 16; ++n) smooth[n - 1] = 1.0 / (n * n);
  const ModeVector f(smooth);
  double previous = 1e300;
  for (double delta : {0.2, 0.1, 0.05, 0.02, 0.01, 0.001}) {
    const double gap = (U.apply(0.3 + delta, 0.1, f).coeffs - U.apply(0.3, 0.1, f).coeffs).norm();
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("cocycle and adjointness, random") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (const auto& a : {CoefficientSpec::constant(0.7), CoefficientSpec::affine(0.5, 0.25),
                        CoefficientSpec::table({0.0, 1.0, 2.0}, {1.0, 2.0, 0.5})}) {
    const EvolutionFamily U(a, 2.0, 12);
    for (int k = 0; k < 100; ++k) {
      double t[3] = {u(rng), u(rng), u(rng)};
      std::sort(t, t + 3);
      const ModeVector f(random_vector(rng, 12));
      const ModeVector g(random_vector(rng, 12));
      const ModeVector direct = U.apply(t[2], t[0], f);
      CHECK((U.apply(t[2], t[1], U.apply(t[1], t[0], f)).coeffs - direct.coeffs).norm() <= 1e-12 * f.coeffs.norm());
      CHECK(direct.coeffs.dot(g.coeffs) ==
            Approx(f.coeffs.dot(U.apply_adjoint(t[2], t[0], g).coeffs)).epsilon(1e-10));
    }
  }
}
