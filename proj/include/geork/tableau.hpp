#pragma once

// Butcher tableaus for the Gauss, HBVM(k,s) and EQUIP(s) families, all built
// from the Legendre basis:
//
//   Gauss / EQUIP:  A = P X_s(alpha) P^{-1},          P   = (P_j(c_i)), s x s
//   HBVM(k,s):      A = W_{s+1} Xhat_s W_s^T Omega,   W_m = (P_j(c_i)), k x m
//
// with c, b the Gauss-Legendre rule of matching size and Omega = diag(b).

#include <optional>
#include <string>

#include "geork/quadrature.hpp"

namespace geork {

enum class MethodKind { gauss, hbvm, equip };

struct MethodSpec {
  MethodKind kind = MethodKind::gauss;
  int s = 1;
  std::optional<int> k;  // hbvm only, k >= s

  static MethodSpec gauss(int s) { return {MethodKind::gauss, s, std::nullopt}; }
  static MethodSpec hbvm(int k, int s) { return {MethodKind::hbvm, s, k}; }
  static MethodSpec equip(int s) { return {MethodKind::equip, s, std::nullopt}; }

  /// Number of Runge-Kutta stages (k for hbvm, s otherwise).
  int n_stages() const { return kind == MethodKind::hbvm ? *k : s; }
  int order() const { return 2 * s; }

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// Throws InvalidArgument when the method is inconsistent (k missing or < s for
/// hbvm, k present otherwise, s < 1).
void validate(const MethodSpec& spec);

/// "gauss", "hbvm" or "equip".
std::string kind_name(MethodKind kind);

/// Display label: GAUSS(3), HBVM(6,3), EQUIP(3).
std::string display_name(const MethodSpec& spec);

struct CoreMatrix {
  int s = 0;
  double alpha = 0.0;
  Matrix entries;  // s x s for X_s(alpha), (s+1) x s for Xhat_s
  Vector xi;       // xi_1 .. xi_{rows-1}
};

struct ButcherTableau {
  int n_stages = 0;
  Matrix A;
  Vector b;
  Vector c;
  int order = 0;
  MethodSpec spec;
  double alpha = 0.0;
};

/// xi_j = 1 / (2 sqrt(4 j^2 - 1)).
double xi(int j);

/// Tridiagonal X_s(alpha). alpha only enters the trailing off-diagonal pair
/// and is ignored when s == 1.
CoreMatrix build_X(int s, double alpha);

/// X_s(0) with an extra bottom row holding xi_s in the last column.
CoreMatrix build_Xhat(int s);

ButcherTableau build_gauss(int s);
ButcherTableau build_equip_tableau(int s, double alpha);
ButcherTableau build_hbvm(int k, int s);

/// Dispatch on the method kind; alpha is used only for equip.
ButcherTableau build_tableau(const MethodSpec& spec, double alpha = 0.0);

/// max |diag(b) A + A^T diag(b) - b b^T|. Zero certifies conservation of
/// quadratic invariants.
double symplecticity_residual(const ButcherTableau& t);

/// Aligned fixed-point listing of c, A and b (15 significant digits).
std::string format_tableau(const ButcherTableau& t);

/// Header lines `# method`, `# s`, `# k`, `# alpha`, then one row
/// `c_i,a_i1,...,a_in` per stage and a final `,b_1,...,b_n` row.
std::string format_tableau_csv(const ButcherTableau& t);

}  // namespace geork
