// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "geork/experiments.hpp"
#include "geork/integrator.hpp"
#include "geork/tableau.hpp"
#include "oracles.hpp"

using namespace geork;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Report {
  bool ok = true;
  std::vector<std::string> lines;

  void check(bool cond, const std::string& what) {
    ok = ok && cond;
    lines.push_back(std::string(cond ? "ok   " : "FAIL ") + what);
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

bool in_range(double x, double lo, double hi) { return x >= lo && x <= hi; }

int threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(std::min(n, 8u));
}

const ConvergenceResult& find(const std::vector<ConvergenceResult>& rs, const MethodSpec& m, Observable o) {
  for (const auto& r : rs) {
    if (r.method == m && r.observable == o) return r;
  }
  throw std::runtime_error("missing result for " + display_name(m));
}

double max_error(const ConvergenceResult& r) {
  double m = 0.0;
  for (const auto& s : r.samples) m = std::max(m, s.error);
  return m;
}

Report tableau_oracles() {
  Report r;
  for (int s = 1; s <= 3; ++s) {
    const Matrix oracle_a = oracle::gauss_collocation_tableau(s);
    const double dg = (build_gauss(s).A - oracle_a).cwiseAbs().maxCoeff();
    const double dh = (build_hbvm(s, s).A - build_gauss(s).A).cwiseAbs().maxCoeff();
    r.check(dg <= 1e-12, "GAUSS(" + std::to_string(s) + ") vs collocation oracle: " + num(dg));
    r.check(dh <= 1e-12, "HBVM(" + std::to_string(s) + "," + std::to_string(s) + ") vs GAUSS: " + num(dh));
  }
  return r;
}

Report equip_symplecticity() {
  Report r;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 2; s <= 4; ++s) {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) worst = std::max(worst, symplecticity_residual(build_equip_tableau(s, unif(rng))));
    r.check(worst <= 1e-12, "EQUIP(" + std::to_string(s) + ") worst residual over 20 alphas: " + num(worst));
  }
  return r;
}

Report order_six(const std::vector<ConvergenceResult>& rs) {
  Report r;
  for (const auto& m : {MethodSpec::gauss(3), MethodSpec::hbvm(4, 3), MethodSpec::hbvm(6, 3), MethodSpec::equip(3)}) {
    const auto& res = find(rs, m, Observable::solution_error);
    r.check(res.fitted && in_range(res.slope, 5.5, 6.5), display_name(m) + " solution slope " + num(res.slope));
  }
  return r;
}

Report constant_ratio(const std::vector<ConvergenceResult>& rs) {
  Report r;
  const double cg = find(rs, MethodSpec::gauss(3), Observable::solution_error).pinned_constant;
  const double ch = find(rs, MethodSpec::hbvm(6, 3), Observable::solution_error).pinned_constant;
  const double ce = find(rs, MethodSpec::equip(3), Observable::solution_error).pinned_constant;
  r.check(in_range(cg / ch, 15.0, 100.0), "C(GAUSS(3)) / C(HBVM(6,3)) = " + num(cg / ch));
  r.check(in_range(ch / ce, 1.0 / 3.0, 3.0), "C(HBVM(6,3)) / C(EQUIP(3)) = " + num(ch / ce));
  return r;
}

Report hamiltonian_orders(const std::vector<ConvergenceResult>& rs, double h0) {
  Report r;
  const auto& h4 = find(rs, MethodSpec::hbvm(4, 3), Observable::energy_error);
  r.check(h4.fitted && in_range(h4.slope, 7.0, 9.0), "HBVM(4,3) energy slope " + num(h4.slope));
  for (int k : {9, 12}) {
    const auto m = MethodSpec::hbvm(k, 3);
    const double worst = max_error(find(rs, m, Observable::energy_error));
    r.check(worst <= 1e-11 * std::abs(h0), display_name(m) + " max energy deviation " + num(worst));
  }
  return r;
}

Report angular_momentum_checks(const std::vector<ConvergenceResult>& rs) {
  Report r;
  for (const auto& m : {MethodSpec::gauss(3), MethodSpec::equip(3)}) {
    const double worst = max_error(find(rs, m, Observable::momentum_error));
    r.check(worst <= 1e-11, display_name(m) + " max L deviation " + num(worst));
  }
  const auto& l6 = find(rs, MethodSpec::hbvm(6, 3), Observable::momentum_error);
  r.check(l6.fitted && in_range(l6.slope, 5.5, 6.5), "HBVM(6,3) L slope " + num(l6.slope));
  const auto& l9 = find(rs, MethodSpec::hbvm(9, 3), Observable::momentum_error);
  const auto& l12 = find(rs, MethodSpec::hbvm(12, 3), Observable::momentum_error);
  double worst_ratio = 1.0;
  for (std::size_t i = 0; i < l6.samples.size(); ++i) {
    const double vals[] = {l6.samples[i].error, l9.samples[i].error, l12.samples[i].error};
    const double hi = std::max({vals[0], vals[1], vals[2]});
    const double lo = std::min({vals[0], vals[1], vals[2]});
    worst_ratio = std::max(worst_ratio, hi / lo);
  }
  r.check(worst_ratio <= 1.5, "HBVM(6/9/12,3) L curves, worst pointwise ratio " + num(worst_ratio));
  return r;
}

Report polynomial_exactness() {
  Report r;
  const auto [sys, s0] = quartic_oscillator();
  const SolverConfig cfg;
  const double h0 = sys.energy(s0.y);
  auto max_dev = [&, sys = sys, s0 = s0](const MethodSpec& m, double h, int n) {
    double worst = 0.0;
    for (const auto& rec : integrate_fixed(m, sys, s0, h, n, cfg)) worst = std::max(worst, std::abs(sys.energy(rec.state.y) - h0));
    return worst;
  };
  const double d6 = max_dev(MethodSpec::hbvm(6, 3), 0.1, 1000);
  r.check(d6 <= 1e-12, "HBVM(6,3) max energy deviation at h=0.1: " + num(d6));

  std::vector<std::pair<double, double>> pts;
  for (int n : {250, 500, 1000}) {
    const double h = 100.0 / n;
    pts.emplace_back(h, max_dev(MethodSpec::hbvm(4, 3), h, n));
  }
  r.check(pts[2].second > 1e-10, "HBVM(4,3) deviation at h=0.1: " + num(pts[2].second));
  const double slope = fit_order(pts).slope;
  r.check(in_range(slope, 7.0, 9.0), "HBVM(4,3) deviation slope over h=0.4..0.1: " + num(slope));
  return r;
}

Report drift_verdicts(const DriftStudy& study) {
  Report r;
  auto verdict = [&](const MethodSpec& m, const std::string& inv) {
    for (const auto& rep : study.reports) {
      if (rep.method == m && rep.invariant == inv) return rep;
    }
    throw std::runtime_error("missing drift report");
  };
  struct Expect {
    MethodSpec m;
    std::string inv;
    DriftVerdict v;
  };
  const Expect expected[] = {
      {MethodSpec::gauss(3), "H", DriftVerdict::drifting},   {MethodSpec::gauss(3), "L", DriftVerdict::conserved},
      {MethodSpec::hbvm(12, 3), "H", DriftVerdict::conserved}, {MethodSpec::hbvm(12, 3), "L", DriftVerdict::drifting},
      {MethodSpec::equip(3), "H", DriftVerdict::conserved},  {MethodSpec::equip(3), "L", DriftVerdict::conserved},
  };
  for (const auto& e : expected) {
    const auto rep = verdict(e.m, e.inv);
    r.check(rep.verdict == e.v, display_name(e.m) + " " + e.inv + " " + verdict_name(rep.verdict) + " (first " +
                                    num(rep.deviations.front()) + ", final " + num(rep.deviations.back()) +
                                    ", slope " + num(rep.drift_slope) + " +- " + num(rep.slope_stderr) + ")");
  }
  for (const auto& s : study.stats) {
    r.check(s.h_min >= 1e-4 && s.h_max <= 1.0,
            display_name(s.method) + " accepted h in [" + num(s.h_min) + ", " + num(s.h_max) + "]");
  }
  return r;
}

Report equip_contract(const DriftStudy& study) {
  Report r;
  for (const auto& s : study.stats) {
    if (s.method.kind != MethodKind::equip) continue;
    r.check(s.max_step_energy_residual <= 1e-12,
            "max per-step energy residual / (1 + |H|): " + num(s.max_step_energy_residual));
    const double frac = s.accepted ? static_cast<double>(s.flagged) / s.accepted : 1.0;
    r.check(frac < 0.01, "flagged steps " + std::to_string(s.flagged) + " of " + std::to_string(s.accepted));
  }
  return r;
}

Report property_suites() {
  Report r;
  bool exact = true;
  for (int n = 1; n <= 20; ++n) {
    const auto q = gauss_rule(n);
    auto integrate = [&](int d) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.nodes[i], d);
      return s;
    };
    for (int d = 0; d < 2 * n; ++d) exact = exact && std::abs(integrate(d) - 1.0 / (d + 1)) <= 1e-13 / (d + 1);
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = static_cast<double>(oracle::shifted_legendre_explicit(n, q.nodes[i]));
      sq += q.weights[i] * v * v;
    }
    exact = exact && std::abs(sq - 1.0 / (2 * n + 1)) > 0.5 / (2 * n + 1);
  }
  r.check(exact, "quadrature exact to degree 2n-1 and not 2n, n = 1..20");

  double ortho = 0.0;
  for (int s = 1; s <= 6; ++s) {
    for (int k = s + 1; k <= 14; ++k) {
      const auto q = gauss_rule(k);
      const Matrix w = vandermonde(q, s + 1);
      ortho = std::max(ortho, (w.transpose() * q.weights.asDiagonal() * w - Matrix::Identity(s + 1, s + 1))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  r.check(ortho <= 1e-12, "discrete orthonormality, worst " + num(ortho));

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double grad_rel = 0.0;
  for (const auto& sys : {kepler_system(0.6).first, quartic_oscillator().first}) {
    for (int i = 0; i < 100; ++i) {
      Vector y(sys.dim());
      do {
        for (int j = 0; j < sys.dim(); ++j) y[j] = unif(rng);
      } while (y.norm() > 2.0 || y.head(sys.half_dim).norm() < 0.1);
      const Vector g = sys.gradient(y);
      grad_rel = std::max(grad_rel, (g - oracle::fd_gradient(sys.energy, y, 1e-5)).norm() / std::max(1.0, g.norm()));
    }
  }
  r.check(grad_rel <= 1e-6, "gradient vs finite differences, worst relative " + num(grad_rel));

  const auto [kep, k0] = kepler_system(0.6);
  const SolverConfig cfg;
  double rev = 0.0;
  for (double t0 : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const State start{t0, kepler_reference(0.6, t0)};
    const auto t = build_gauss(3);
    const StepRecord fwd = rk_step(t, kep, start, kTwoPi / 100, cfg);
    const StepRecord back = rk_step(t, kep, fwd.state, -kTwoPi / 100, cfg);
    rev = std::max(rev, (back.state.y - start.y).cwiseAbs().maxCoeff());
  }
  r.check(rev <= 10.0 * cfg.stage_tol, "GAUSS(3) reversibility, worst " + num(rev));

  const auto run1 = integrate_fixed(MethodSpec::equip(3), kep, k0, kTwoPi / 50, 50, cfg);
  const auto run2 = integrate_fixed(MethodSpec::equip(3), kep, k0, kTwoPi / 50, 50, cfg);
  ConvergenceConfig cc;
  cc.periods = 1;
  cc.steps_per_period = {50, 70, 100};
  cc.threads = 1;
  const std::string c1 = format_convergence_csv(convergence_study({MethodSpec::hbvm(6, 3)}, cc));
  cc.threads = threads();
  const std::string c2 = format_convergence_csv(convergence_study({MethodSpec::hbvm(6, 3)}, cc));
  r.check(format_step_csv(run1, kep, k0) == format_step_csv(run2, kep, k0) && c1 == c2,
          "CSV byte reproducibility (step and convergence, sequential vs threaded)");
  return r;
}

}  // namespace

int main() {
  int failures = 0;
  auto emit = [&](int id, const std::string& title, const std::function<Report()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    try {
      rep = fn();
    } catch (const std::exception& e) {
      rep.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s (%.2fs)\n", rep.ok ? "PASS" : "FAIL", id, title.c_str(), secs);
    for (const auto& l : rep.lines) std::printf("       %s\n", l.c_str());
    std::fflush(stdout);
    failures += rep.ok ? 0 : 1;
  };

  emit(1, "tableau oracles", tableau_oracles);
  emit(2, "EQUIP symplecticity", equip_symplecticity);

  std::vector<ConvergenceResult> conv;
  double h0 = 0.0;
  {
    ConvergenceConfig cfg;
    cfg.threads = threads();
    h0 = kepler_system(cfg.e).first.energy(kepler_system(cfg.e).second.y);
    const auto t0 = std::chrono::steady_clock::now();
    conv = convergence_study({MethodSpec::gauss(3), MethodSpec::hbvm(4, 3), MethodSpec::hbvm(6, 3),
                              MethodSpec::hbvm(9, 3), MethodSpec::hbvm(12, 3), MethodSpec::equip(3)},
                             cfg);
    std::printf("convergence study: %.2fs\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  emit(3, "order 6 on Kepler e=0.6", [&] { return order_six(conv); });
  emit(4, "error-constant ratios", [&] { return constant_ratio(conv); });
  emit(5, "Hamiltonian-error orders", [&] { return hamiltonian_orders(conv, h0); });
  emit(6, "angular momentum", [&] { return angular_momentum_checks(conv); });
  emit(7, "polynomial exactness", polynomial_exactness);

  DriftStudy drift;
  {
    DriftConfig cfg;
    cfg.threads = threads();
    const auto t0 = std::chrono::steady_clock::now();
    drift = drift_study({MethodSpec::gauss(3), MethodSpec::hbvm(12, 3), MethodSpec::equip(3)}, cfg);
    std::printf("drift study: %.2fs\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  emit(8, "drift verdicts and stepsize range, Kepler e=0.99", [&] { return drift_verdicts(drift); });
  emit(9, "EQUIP step contract", [&] { return equip_contract(drift); });
  emit(10, "property suites", property_suites);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
