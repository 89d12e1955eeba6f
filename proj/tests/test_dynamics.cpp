#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "geork/dynamics.hpp"
#include "geork/error.hpp"
#include "oracles.hpp"

using namespace geork;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Random state with |y| <= 2 and, when `min_q` > 0, |q| >= min_q.
Vector random_state(std::mt19937_64& rng, int dim, double min_q) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int m = dim / 2;
  for (;;) {
    Vector y(dim);
    for (int i = 0; i < dim; ++i) y[i] = unif(rng);
    if (y.norm() > 2.0) continue;
    if (min_q > 0.0 && y.head(m).norm() < min_q) continue;
    return y;
  }
}

void check_gradient(const HamiltonianSystem& sys, double min_q) {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector y = random_state(rng, sys.dim(), min_q);
    const Vector g = sys.gradient(y);
    const Vector fd = oracle::fd_gradient(sys.energy, y, 1e-5);
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    const Vector f = canonical_field(sys, y);
    CHECK(std::abs(g.dot(f)) <= 1e-12 * std::max(1.0, g.squaredNorm()));
  }
}

}  // namespace

TEST_CASE("canonical_field examples") {
  const auto [osc, y0] = harmonic_oscillator();
  const Vector f = canonical_field(osc, vec({1.0, 0.0}));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -1.0);

  const auto [kep, k0] = kepler_system(0.0);
  const Vector fk = canonical_field(kep, vec({1.0, 0.0, 0.0, 1.0}));
  CHECK((fk - vec({0.0, 1.0, -1.0, 0.0})).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gradients match finite differences") {
  check_gradient(kepler_system(0.6).first, 0.1);
  check_gradient(quartic_oscillator().first, 0.0);
  check_gradient(harmonic_oscillator().first, 0.0);
}

TEST_CASE("kepler_system initial data") {
  const auto [sys, s0] = kepler_system(0.6);
  CHECK(sys.half_dim == 2);
  CHECK(sys.dim() == 4);
  CHECK(s0.t == 0.0);
  CHECK(std::abs(sys.energy(s0.y) + 0.5) < 1e-15);
  CHECK(std::abs(angular_momentum(s0.y) - 0.8) < 1e-15);
  REQUIRE(sys.invariants.size() >= 2);
  CHECK(sys.invariants[0].name == "H");
  REQUIRE(sys.find_invariant("L") != nullptr);
  CHECK(sys.find_invariant("nope") == nullptr);
  CHECK(sys.period.value() == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(!sys.poly_degree.has_value());

  const auto [s99, y99] = kepler_system(0.99);
  CHECK(std::abs(y99.y[3] - std::sqrt(1.99 / 0.01)) < 1e-12);
  CHECK(std::abs(y99.y[3] - 14.1067) < 1e-4);

  CHECK_THROWS_AS(kepler_system(1.0), InvalidArgument);
  CHECK_THROWS_AS(kepler_system(-0.1), InvalidArgument);
  CHECK_THROWS_AS(kepler_reference(1.2, 0.0), InvalidArgument);
}

TEST_CASE("kepler collision guard") {
  const auto [sys, s0] = kepler_system(0.5);
  CHECK_THROWS_AS(sys.gradient(vec({1e-9, 0.0, 0.0, 1.0})), DomainError);
  CHECK_NOTHROW(sys.gradient(vec({0.01, 0.0, 0.0, 14.0})));
}

TEST_CASE("kepler_reference examples") {
  for (double e : {0.0, 0.3, 0.6, 0.99}) {
    const Vector r0 = kepler_reference(e, 0.0);
    const Vector expected = vec({1.0 - e, 0.0, 0.0, std::sqrt((1.0 + e) / (1.0 - e))});
    CHECK((r0 - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Vector circ = kepler_reference(0.0, std::numbers::pi / 2);
  CHECK((circ - vec({0.0, 1.0, -1.0, 0.0})).cwiseAbs().maxCoeff() < 1e-12);

  const Vector per = kepler_reference(0.6, 2.0 * std::numbers::pi);
  CHECK((per - kepler_reference(0.6, 0.0)).cwiseAbs().maxCoeff() < 1e-12);

  const Vector apo = kepler_reference(0.6, std::numbers::pi);
  CHECK((apo - vec({-1.6, 0.0, 0.0, -0.5})).cwiseAbs().maxCoeff() < 1e-12);

  const auto [sys, s0] = kepler_system(0.6);
  REQUIRE(sys.reference);
  CHECK(sys.reference(1.3) == kepler_reference(0.6, 1.3));
}

TEST_CASE("invariants are constant along the reference orbit") {
  for (double e : {0.0, 0.3, 0.6, 0.99}) {
    CAPTURE(e);
    const auto [sys, s0] = kepler_system(e);
    const double l0 = std::sqrt(1.0 - e * e);
    double worst_h = 0.0, worst_l = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 999.0;
      const Vector y = kepler_reference(e, t);
      worst_h = std::max(worst_h, std::abs(sys.energy(y) + 0.5));
      worst_l = std::max(worst_l, std::abs(angular_momentum(y) - l0));
    }
    CHECK(worst_h <= 1e-12);
    CHECK(worst_l <= 1e-12);
  }
}

TEST_CASE("angular_momentum examples") {
  CHECK(angular_momentum(vec({1.0, 0.0, 0.0, 1.0})) == 1.0);
  CHECK(angular_momentum(vec({1.0, 1.0, 1.0, 1.0})) == 0.0);
  CHECK(std::abs(angular_momentum(vec({0.4, 0.0, 0.0, 2.0})) - 0.8) < 1e-15);
  CHECK_THROWS_AS(angular_momentum(vec({1.0, 0.0})), InvalidArgument);
}

TEST_CASE("quartic oscillator") {
  const auto [sys, s0] = quartic_oscillator();
  CHECK(sys.half_dim == 1);
  CHECK(sys.energy(s0.y) == 0.25);
  CHECK(sys.gradient(vec({1.0, 0.0})) == vec({1.0, 0.0}));
  CHECK(sys.poly_degree.value() == 4);
  CHECK(sys.find_invariant("L") == nullptr);
}

TEST_CASE("is_finite") {
  CHECK(is_finite(vec({1.0, 2.0})));
  CHECK_FALSE(is_finite(vec({1.0, std::nan("")})));
  CHECK_FALSE(is_finite(vec({INFINITY, 0.0})));
}
