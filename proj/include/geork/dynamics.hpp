#pragma once

// Canonical Hamiltonian systems. States are laid out as (q_1..q_m, p_1..p_m).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geork/quadrature.hpp"

namespace geork {

struct State {
  double t = 0.0;
  Vector y;
};

struct Invariant {
  std::string name;
  std::function<double(const Vector&)> eval;
};

struct HamiltonianSystem {
  std::string name;
  int half_dim = 1;
  std::function<double(const Vector&)> energy;
  std::function<Vector(const Vector&)> gradient;
  std::optional<int> poly_degree;    // nu, set only for polynomial H
  std::vector<Invariant> invariants;  // invariants[0] is always "H"
  std::function<Vector(double)> reference;  // empty when no closed form is known
  std::optional<double> period;

  int dim() const { return 2 * half_dim; }
  const Invariant* find_invariant(const std::string& n) const;
};

/// J grad H(y): (dH/dp, -dH/dq).
Vector canonical_field(const HamiltonianSystem& sys, const Vector& y);

/// Planar Kepler problem H = |p|^2/2 - 1/|q|, mu = a = 1, period 2 pi,
/// started at periapsis. Invariants: H and L.
std::pair<HamiltonianSystem, State> kepler_system(double e);

/// Exact Kepler state at time t via Newton on E - e sin E = t (mod 2 pi).
Vector kepler_reference(double e, double t);

/// L = q1 p2 - q2 p1. Throws InvalidArgument unless y has 4 entries.
double angular_momentum(const Vector& y);

/// H = p^2/2 + q^4/4 (nu = 4), started at (1, 0).
std::pair<HamiltonianSystem, State> quartic_oscillator();

/// H = (q^2 + p^2)/2, started at (1, 0). Used for solver smoke tests.
std::pair<HamiltonianSystem, State> harmonic_oscillator();

/// Finite entries only.
bool is_finite(const Vector& y);

}  // namespace geork
