#include "geork/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "geork/error.hpp"

namespace geork {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCollisionRadius = 1e-8;

void check_eccentricity(double e) {
  if (!(e >= 0.0 && e < 1.0)) {
    throw InvalidArgument("dynamics", "eccentricity must lie in [0, 1), got " + std::to_string(e));
  }
}

}  // namespace

const Invariant* HamiltonianSystem::find_invariant(const std::string& n) const {
  for (const auto& inv : invariants) {
    if (inv.name == n) return &inv;
  }
  return nullptr;
}

Vector canonical_field(const HamiltonianSystem& sys, const Vector& y) {
  const int m = sys.half_dim;
  const Vector g = sys.gradient(y);
  Vector f(2 * m);
  f.head(m) = g.tail(m);
  f.tail(m) = -g.head(m);
  return f;
}

double angular_momentum(const Vector& y) {
  if (y.size() != 4) throw InvalidArgument("dynamics", "angular_momentum: planar state (m = 2) required");
  return y[0] * y[3] - y[1] * y[2];
}

bool is_finite(const Vector& y) { return y.allFinite(); }

Vector kepler_reference(double e, double t) {
  check_eccentricity(e);
  double mean = std::fmod(t, kTwoPi);
  if (mean < 0.0) mean += kTwoPi;

  double ecc = e > 0.8 ? std::numbers::pi : mean;
  bool converged = false;
  for (int iter = 0; iter < 50; ++iter) {
    const double r = ecc - e * std::sin(ecc) - mean;
    if (std::abs(r) <= 1e-14) {
      converged = true;
      break;
    }
    ecc -= r / (1.0 - e * std::cos(ecc));
  }
  if (!converged) throw NonConvergence("kepler_reference: Kepler equation did not converge");

  const double root = std::sqrt(1.0 - e * e);
  const double ce = std::cos(ecc);
  const double se = std::sin(ecc);
  const double denom = 1.0 - e * ce;
  Vector y(4);
  y << ce - e, root * se, -se / denom, root * ce / denom;
  return y;
}

std::pair<HamiltonianSystem, State> kepler_system(double e) {
  check_eccentricity(e);
  HamiltonianSystem sys;
  sys.name = "kepler";
  sys.half_dim = 2;
  sys.energy = [](const Vector& y) {
    return 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / std::hypot(y[0], y[1]);
  };
  sys.gradient = [](const Vector& y) {
    const double r = std::hypot(y[0], y[1]);
    if (!(r >= kCollisionRadius)) throw DomainError("kepler gradient: |q| = " + std::to_string(r));
    const double r3 = r * r * r;
    Vector g(4);
    g << y[0] / r3, y[1] / r3, y[2], y[3];
    return g;
  };
  sys.invariants = {{"H", sys.energy}, {"L", angular_momentum}};
  sys.reference = [e](double t) { return kepler_reference(e, t); };
  sys.period = kTwoPi;

  State s0;
  s0.y.resize(4);
  s0.y << 1.0 - e, 0.0, 0.0, std::sqrt((1.0 + e) / (1.0 - e));
  return {std::move(sys), std::move(s0)};
}

std::pair<HamiltonianSystem, State> quartic_oscillator() {
  HamiltonianSystem sys;
  sys.name = "quartic";
  sys.half_dim = 1;
  sys.energy = [](const Vector& y) {
    const double q2 = y[0] * y[0];
    return 0.5 * y[1] * y[1] + 0.25 * q2 * q2;
  };
  sys.gradient = [](const Vector& y) {
    Vector g(2);
    g << y[0] * y[0] * y[0], y[1];
    return g;
  };
  sys.poly_degree = 4;
  sys.invariants = {{"H", sys.energy}};
  State s0;
  s0.y.resize(2);
  s0.y << 1.0, 0.0;
  return {std::move(sys), std::move(s0)};
}

std::pair<HamiltonianSystem, State> harmonic_oscillator() {
  HamiltonianSystem sys;
  sys.name = "harmonic";
  sys.half_dim = 1;
  sys.energy = [](const Vector& y) { return 0.5 * (y[0] * y[0] + y[1] * y[1]); };
  sys.gradient = [](const Vector& y) { return Vector(y); };
  sys.poly_degree = 2;
  sys.invariants = {{"H", sys.energy}};
  sys.reference = [](double t) {
    Vector y(2);
    y << std::cos(t), -std::sin(t);
    return y;
  };
  sys.period = kTwoPi;
  State s0;
  s0.y.resize(2);
  s0.y << 1.0, 0.0;
  return {std::move(sys), std::move(s0)};
}

}  // namespace geork
