#include "geork/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geork/error.hpp"
#include "numfmt.hpp"

namespace geork {
namespace {

constexpr double kMaxCondition = 1e12;

void require_s(int s, const char* where) {
  if (s < 1) throw InvalidArgument("tableau", std::string(where) + ": s must be >= 1");
}

// Fills the shared tridiagonal s x s block of X_s / Xhat_s.
void fill_core(Matrix& m, int s, double alpha) {
  m(0, 0) = 0.5;
  for (int j = 1; j < s; ++j) {
    const double v = xi(j) + (j == s - 1 ? alpha : 0.0);
    m(j - 1, j) = -v;
    m(j, j - 1) = v;
  }
}

}  // namespace

void validate(const MethodSpec& spec) {
  if (spec.s < 1) throw InvalidArgument("tableau", "method: s must be >= 1");
  if (spec.kind == MethodKind::hbvm) {
    if (!spec.k) throw InvalidArgument("tableau", "method: hbvm requires k");
    if (*spec.k < spec.s) {
      throw InvalidArgument("tableau", "method: hbvm requires k >= s (got k=" + std::to_string(*spec.k) +
                                           ", s=" + std::to_string(spec.s) + ")");
    }
    if (*spec.k > kMaxGaussNodes) throw InvalidArgument("tableau", "method: hbvm k exceeds node cap");
  } else if (spec.k) {
    throw InvalidArgument("tableau", "method: k is only meaningful for hbvm");
  }
  if (spec.s > kMaxGaussNodes) throw InvalidArgument("tableau", "method: s exceeds node cap");
}

std::string kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::gauss: return "gauss";
    case MethodKind::hbvm: return "hbvm";
    case MethodKind::equip: return "equip";
  }
  return "unknown";
}

std::string display_name(const MethodSpec& spec) {
  switch (spec.kind) {
    case MethodKind::gauss: return "GAUSS(" + std::to_string(spec.s) + ")";
    case MethodKind::equip: return "EQUIP(" + std::to_string(spec.s) + ")";
    case MethodKind::hbvm:
      return "HBVM(" + std::to_string(spec.k.value_or(0)) + "," + std::to_string(spec.s) + ")";
  }
  return "?";
}

double xi(int j) {
  if (j < 1) throw InvalidArgument("tableau", "xi: index must be >= 1");
  const double jj = static_cast<double>(j);
  return 1.0 / (2.0 * std::sqrt(4.0 * jj * jj - 1.0));
}

CoreMatrix build_X(int s, double alpha) {
  require_s(s, "build_X");
  if (s == 1) alpha = 0.0;
  CoreMatrix x{s, alpha, Matrix::Zero(s, s), Vector(s - 1)};
  for (int j = 1; j < s; ++j) x.xi[j - 1] = xi(j);
  fill_core(x.entries, s, alpha);
  return x;
}

CoreMatrix build_Xhat(int s) {
  require_s(s, "build_Xhat");
  CoreMatrix x{s, 0.0, Matrix::Zero(s + 1, s), Vector(s)};
  for (int j = 1; j <= s; ++j) x.xi[j - 1] = xi(j);
  fill_core(x.entries, s, 0.0);
  x.entries(s, s - 1) = xi(s);
  return x;
}

ButcherTableau build_equip_tableau(int s, double alpha) {
  require_s(s, "build_equip_tableau");
  const QuadratureRule rule = gauss_rule(s);
  const Matrix p = vandermonde(rule, s);

  Eigen::JacobiSVD<Matrix> svd(p);
  const Vector sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= kMaxCondition)) {
    throw IllConditioned("build_equip_tableau: Legendre Vandermonde condition " + std::to_string(cond));
  }

  // A = (P X) P^{-1}  <=>  P^T A^T = (P X)^T.
  const CoreMatrix x = build_X(s, alpha);
  const Matrix px = p * x.entries;
  const Matrix a_t = p.transpose().partialPivLu().solve(px.transpose());

  ButcherTableau t;
  t.n_stages = s;
  t.A = a_t.transpose();
  t.b = rule.weights;
  t.c = rule.nodes;
  t.order = 2 * s;
  t.spec = MethodSpec::equip(s);
  t.alpha = x.alpha;
  return t;
}

ButcherTableau build_gauss(int s) {
  ButcherTableau t = build_equip_tableau(s, 0.0);
  t.spec = MethodSpec::gauss(s);
  return t;
}

ButcherTableau build_hbvm(int k, int s) {
  require_s(s, "build_hbvm");
  validate(MethodSpec::hbvm(k, s));
  const QuadratureRule rule = gauss_rule(k);
  const Matrix w_wide = vandermonde(rule, s + 1);
  const Matrix w = w_wide.leftCols(s);
  const CoreMatrix xhat = build_Xhat(s);

  ButcherTableau t;
  t.n_stages = k;
  t.A = w_wide * xhat.entries * w.transpose() * rule.weights.asDiagonal();
  t.b = rule.weights;
  t.c = rule.nodes;
  t.order = 2 * s;
  t.spec = MethodSpec::hbvm(k, s);
  return t;
}

ButcherTableau build_tableau(const MethodSpec& spec, double alpha) {
  validate(spec);
  switch (spec.kind) {
    case MethodKind::gauss: return build_gauss(spec.s);
    case MethodKind::hbvm: return build_hbvm(*spec.k, spec.s);
    case MethodKind::equip: return build_equip_tableau(spec.s, alpha);
  }
  throw InvalidArgument("tableau", "unknown method kind");
}

double symplecticity_residual(const ButcherTableau& t) {
  const Matrix ba = t.b.asDiagonal() * t.A;
  const Matrix m = ba + ba.transpose() - t.b * t.b.transpose();
  return m.cwiseAbs().maxCoeff();
}

std::string format_tableau(const ButcherTableau& t) {
  using detail::format_fixed15;
  const int n = t.n_stages;
  std::size_t width = 0;
  auto widen = [&](double v) { width = std::max(width, format_fixed15(v).size()); };
  for (int i = 0; i < n; ++i) {
    widen(t.c[i]);
    widen(t.b[i]);
    for (int j = 0; j < n; ++j) widen(t.A(i, j));
  }
  auto cell = [&](double v) {
    std::string s = format_fixed15(v);
    return std::string(width - s.size(), ' ') + s;
  };

  std::ostringstream os;
  os << display_name(t.spec);
  if (t.spec.kind == MethodKind::equip) os << "  alpha = " << detail::format_g17(t.alpha);
  os << "  order " << t.order << "\n";
  for (int i = 0; i < n; ++i) {
    os << cell(t.c[i]) << " |";
    for (int j = 0; j < n; ++j) os << ' ' << cell(t.A(i, j));
    os << '\n';
  }
  os << std::string(width, '-') << "-+" << std::string((width + 1) * n, '-') << '\n';
  os << std::string(width, ' ') << " |";
  for (int j = 0; j < n; ++j) os << ' ' << cell(t.b[j]);
  os << '\n';
  return os.str();
}

std::string format_tableau_csv(const ButcherTableau& t) {
  using detail::format_g17;
  std::ostringstream os;
  os << "# method " << kind_name(t.spec.kind) << '\n';
  os << "# s " << t.spec.s << '\n';
  os << "# k " << (t.spec.k ? std::to_string(*t.spec.k) : std::string()) << '\n';
  os << "# alpha " << format_g17(t.alpha) << '\n';
  for (int i = 0; i < t.n_stages; ++i) {
    os << format_g17(t.c[i]);
    for (int j = 0; j < t.n_stages; ++j) os << ',' << format_g17(t.A(i, j));
    os << '\n';
  }
  for (int j = 0; j < t.n_stages; ++j) os << ',' << format_g17(t.b[j]);
  os << '\n';
  return os.str();
}

}  // namespace geork
