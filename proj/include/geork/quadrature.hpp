#pragma once

// Shifted, L2[0,1]-orthonormal Legendre basis and Gauss-Legendre rules on [0,1].
//
// Basis indices are 1-based in meaning: P_1 == 1, and P_j has degree j - 1.
// Matrix storage is 0-based, so column `j - 1` of a Vandermonde holds P_j.

#include <Eigen/Dense>

namespace geork {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest rule size supported by gauss_rule().
inline constexpr int kMaxGaussNodes = 64;

struct QuadratureRule {
  int n_nodes = 0;
  Vector nodes;    // strictly increasing, in (0, 1)
  Vector weights;  // positive, sum to 1
};

/// n-point Gauss-Legendre rule on [0,1]. Throws InvalidArgument unless
/// 1 <= n <= kMaxGaussNodes.
QuadratureRule gauss_rule(int n);

/// Shifted orthonormal Legendre polynomial P_j(tau), degree j - 1.
double legendre_eval(int j, double tau);

/// Values P_1(tau) .. P_n(tau) in one recurrence sweep.
Vector legendre_values(int n, double tau);

/// W(i, j-1) = P_j(c_i) for j = 1..n_cols. n_cols may exceed the rule size by
/// one (the HBVM construction needs s + 1 columns at k = s nodes).
Matrix vandermonde(const QuadratureRule& rule, int n_cols);

/// Bound view onto the basis up to a fixed degree.
class LegendreBasis {
 public:
  explicit LegendreBasis(int max_degree);

  int max_degree() const noexcept { return max_degree_; }
  double operator()(int j, double tau) const;
  Vector values(double tau) const { return legendre_values(max_degree_, tau); }

 private:
  int max_degree_;
};

}  // namespace geork
