#include "geork/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "geork/error.hpp"

namespace geork {
namespace {

struct LegendrePair {
  double value;
  double derivative;
};

// Classical Legendre L_n on [-1, 1] and its derivative.
LegendrePair classical_legendre(int n, double x) {
  double p_prev = 1.0;
  double p = x;
  if (n == 0) return {1.0, 0.0};
  for (int m = 2; m <= n; ++m) {
    const double p_next = ((2.0 * m - 1.0) * x * p - (m - 1.0) * p_prev) / m;
    p_prev = p;
    p = p_next;
  }
  const double dp = n * (x * p - p_prev) / (x * x - 1.0);
  return {p, dp};
}

}  // namespace

QuadratureRule gauss_rule(int n) {
  if (n < 1 || n > kMaxGaussNodes) {
    throw InvalidArgument("quadrature", "gauss_rule: node count " + std::to_string(n) +
                                            " outside [1, " + std::to_string(kMaxGaussNodes) + "]");
  }
  QuadratureRule rule;
  rule.n_nodes = n;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  // Roots come in +-x pairs; solve for the negative half and mirror so that
  // the symmetry c <-> 1 - c holds bit for bit.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    LegendrePair lp{};
    for (int iter = 0; iter < 100; ++iter) {
      lp = classical_legendre(n, x);
      const double dx = lp.value / lp.derivative;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    if (2 * i + 1 == n) x = 0.0;
    lp = classical_legendre(n, x);
    // Standard weight 2 / ((1 - x^2) L_n'(x)^2), halved by the map to [0, 1].
    const double w = 1.0 / ((1.0 - x * x) * lp.derivative * lp.derivative);
    rule.nodes[i] = 0.5 + 0.5 * x;
    rule.nodes[n - 1 - i] = 0.5 - 0.5 * x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

Vector legendre_values(int n, double tau) {
  Vector out(n);
  if (n == 0) return out;
  // Classical recurrence in x = 2 tau - 1, scaled by sqrt(2j - 1) at the end.
  const double x = 2.0 * tau - 1.0;
  double p_prev = 1.0;
  double p = x;
  out[0] = 1.0;
  if (n > 1) out[1] = std::sqrt(3.0) * x;
  for (int m = 2; m < n; ++m) {
    const double p_next = ((2.0 * m - 1.0) * x * p - (m - 1.0) * p_prev) / m;
    p_prev = p;
    p = p_next;
    out[m] = std::sqrt(2.0 * m + 1.0) * p;
  }
  return out;
}

double legendre_eval(int j, double tau) {
  if (j < 1) throw InvalidArgument("quadrature", "legendre_eval: index must be >= 1");
  return legendre_values(j, tau)[j - 1];
}

Matrix vandermonde(const QuadratureRule& rule, int n_cols) {
  if (n_cols < 1 || n_cols > rule.n_nodes + 1) {
    throw InvalidArgument("quadrature", "vandermonde: " + std::to_string(n_cols) +
                                            " columns requested for a " +
                                            std::to_string(rule.n_nodes) + "-node rule");
  }
  Matrix w(rule.n_nodes, n_cols);
  for (int i = 0; i < rule.n_nodes; ++i) w.row(i) = legendre_values(n_cols, rule.nodes[i]).transpose();
  return w;
}

LegendreBasis::LegendreBasis(int max_degree) : max_degree_(max_degree) {
  if (max_degree < 1) throw InvalidArgument("quadrature", "LegendreBasis: max_degree must be >= 1");
}

double LegendreBasis::operator()(int j, double tau) const {
  if (j < 1 || j > max_degree_) {
    throw InvalidArgument("quadrature", "LegendreBasis: index " + std::to_string(j) + " out of range");
  }
  return legendre_eval(j, tau);
}

}  // namespace geork
