#include "geork/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "geork/error.hpp"

namespace geork {
namespace {

constexpr double kDivergenceNorm = 1e8;
constexpr int kMaxEquipHalvings = 5;
constexpr double kSecantOffset = 1e-4;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Evaluates f at every stage y + Z_j. Domain errors mean the iterate left the
// region where H is defined, which is reported as divergence.
void eval_stage_fields(const HamiltonianSystem& sys, const Vector& y, const Matrix& z, Matrix& f) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    try {
      f.col(j) = canonical_field(sys, y + z.col(j));
    } catch (const DomainError& e) {
      throw Divergence(std::string("stage iterate left the domain: ") + e.what());
    }
  }
}

void check_iterate(const Matrix& z) {
  if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kDivergenceNorm) {
    throw Divergence("stage iterate diverged");
  }
}

// d f / d y = J * Hess(H), Hessian by central differences of the gradient.
Matrix field_jacobian(const HamiltonianSystem& sys, const Vector& y) {
  const int d = static_cast<int>(y.size());
  const int m = sys.half_dim;
  Matrix hess(d, d);
  for (int i = 0; i < d; ++i) {
    const double delta = 1e-6 * std::max(1.0, std::abs(y[i]));
    Vector yp = y, ym = y;
    yp[i] += delta;
    ym[i] -= delta;
    hess.col(i) = (sys.gradient(yp) - sys.gradient(ym)) / (2.0 * delta);
  }
  Matrix jac(d, d);
  jac.topRows(m) = hess.bottomRows(m);
  jac.bottomRows(m) = -hess.topRows(m);
  return jac;
}

// Tracks the stopping rule shared by both strategies: converged once the
// update is below tolerance, then keep going while it still shrinks.
struct ConvergenceMonitor {
  double threshold;
  double previous = std::numeric_limits<double>::infinity();
  bool converged = false;

  bool done(double update) {
    if (update <= threshold) converged = true;
    const bool stalled = update == 0.0 || update >= previous;
    previous = update;
    return converged && stalled;
  }
};

StageSolution solve_fixed_point(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y,
                                double h, const SolverConfig& cfg) {
  const Eigen::Index d = y.size();
  Matrix z = Matrix::Zero(d, t.n_stages);
  Matrix f(d, t.n_stages);
  const Matrix a_t = t.A.transpose();
  ConvergenceMonitor monitor{cfg.stage_tol * (1.0 + inf_norm(y))};

  for (int it = 1; it <= cfg.max_stage_iters; ++it) {
    eval_stage_fields(sys, y, z, f);
    Matrix z_new = h * f * a_t;
    const double update = (z_new - z).cwiseAbs().maxCoeff();
    z = std::move(z_new);
    check_iterate(z);
    if (monitor.done(update) || (it == cfg.max_stage_iters && monitor.converged)) {
      return {z.colwise() + y, it};
    }
  }
  throw NonConvergence("fixed-point stage iteration did not converge in " +
                       std::to_string(cfg.max_stage_iters) + " iterations (h = " + std::to_string(h) + ")");
}

StageSolution solve_simplified_newton(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y,
                                      double h, const SolverConfig& cfg) {
  const Eigen::Index d = y.size();
  const Eigen::Index n = t.n_stages;
  Matrix jf;
  try {
    jf = field_jacobian(sys, y);
  } catch (const DomainError& e) {
    throw Divergence(std::string("Jacobian evaluation failed: ") + e.what());
  }

  // Block (i, j) of the iteration matrix is delta_ij I - h a_ij Jf.
  Matrix iter_matrix = Matrix::Identity(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) iter_matrix.block(i * d, j * d, d, d) -= h * t.A(i, j) * jf;
  }
  const Eigen::PartialPivLU<Matrix> lu(iter_matrix);

  Matrix z = Matrix::Zero(d, n);
  Matrix f(d, n);
  const Matrix a_t = t.A.transpose();
  ConvergenceMonitor monitor{cfg.stage_tol * (1.0 + inf_norm(y))};

  for (int it = 1; it <= cfg.max_stage_iters; ++it) {
    eval_stage_fields(sys, y, z, f);
    const Matrix g = z - h * f * a_t;
    const Vector step = lu.solve(-Eigen::Map<const Vector>(g.data(), g.size()));
    z += Eigen::Map<const Matrix>(step.data(), d, n);
    check_iterate(z);
    const double update = inf_norm(step);
    if (monitor.done(update) || (it == cfg.max_stage_iters && monitor.converged)) {
      return {z.colwise() + y, it};
    }
  }
  throw NonConvergence("simplified-Newton stage iteration did not converge in " +
                       std::to_string(cfg.max_stage_iters) + " iterations (h = " + std::to_string(h) + ")");
}

// Secant search for the EQUIP parameter over one step of size h. Returns
// nullopt when no root is found within the budget.
std::optional<StepRecord> tune_alpha(int s, const HamiltonianSystem& sys, const State& y, double h,
                                     const SolverConfig& cfg, double seed, int& evals, int& stage_iters) {
  const double h0 = sys.energy(y.y);
  const double tol = cfg.alpha_tol * (1.0 + std::abs(h0));

  auto residual = [&](double alpha, StepRecord& out) -> std::optional<double> {
    if (evals >= cfg.max_alpha_iters) return std::nullopt;
    ++evals;
    try {
      out = rk_step(build_equip_tableau(s, alpha), sys, y, h, cfg);
    } catch (const NonConvergence&) {
      return std::nullopt;
    } catch (const Divergence&) {
      return std::nullopt;
    }
    stage_iters += out.stage_iters;
    return sys.energy(out.state.y) - h0;
  };
  auto finish = [&](StepRecord rec, double alpha) {
    rec.alpha = s == 1 ? 0.0 : alpha;
    return rec;
  };

  StepRecord r0, r1;
  double a0 = s == 1 ? 0.0 : seed;
  auto g0 = residual(a0, r0);
  if (!g0) return std::nullopt;
  if (s == 1) return std::abs(*g0) <= tol ? std::optional(finish(r0, a0)) : std::nullopt;

  // Best iterate inside the tolerance. Once one exists the secant keeps
  // polishing while |g| shrinks, so accepted residuals sit at round-off
  // level instead of just under tol (a biased residual accumulates as drift).
  std::optional<StepRecord> best;
  double best_alpha = 0.0;
  double best_g = std::numeric_limits<double>::infinity();
  auto consider = [&](double alpha, double g, const StepRecord& rec) {
    if (std::abs(g) <= tol && std::abs(g) < best_g) {
      best = rec;
      best_alpha = alpha;
      best_g = std::abs(g);
      return true;
    }
    return false;
  };
  consider(a0, *g0, r0);
  if (best && best_g == 0.0) return finish(*best, best_alpha);

  double a1 = a0 + kSecantOffset;
  auto g1 = residual(a1, r1);
  while (g1) {
    const bool improved = consider(a1, *g1, r1);
    if (best && (!improved || best_g == 0.0)) break;
    if (*g1 == *g0) break;
    const double a2 = a1 - *g1 * (a1 - a0) / (*g1 - *g0);
    if (!std::isfinite(a2)) break;
    a0 = a1;
    g0 = g1;
    a1 = a2;
    g1 = residual(a1, r1);
  }
  if (best) return finish(*best, best_alpha);
  return std::nullopt;
}

// Caches the tableau for the alpha-free families. With `split_on_failure`
// off, an EQUIP step whose alpha solve fails throws AlphaNotFound so that the
// adaptive driver can shrink h itself; `gauss_fallback` takes the flagged
// alpha = 0 step directly.
class Stepper {
 public:
  explicit Stepper(const MethodSpec& m, bool split_on_failure = true)
      : method_(m), split_on_failure_(split_on_failure) {
    validate(m);
    if (m.kind != MethodKind::equip) tableau_ = build_tableau(m);
  }

  StepRecord step(const HamiltonianSystem& sys, const State& y, double h, const SolverConfig& cfg,
                  double alpha_prev, bool gauss_fallback = false) const {
    if (tableau_) return rk_step(*tableau_, sys, y, h, cfg);
    if (gauss_fallback) {
      StepRecord rec = rk_step(build_gauss(method_.s), sys, y, h, cfg);
      rec.flagged = true;
      return rec;
    }
    if (split_on_failure_) return equip_step(method_.s, sys, y, h, cfg, alpha_prev);
    int evals = 0;
    int stage_iters = 0;
    auto rec = tune_alpha(method_.s, sys, y, h, cfg, alpha_prev, evals, stage_iters);
    if (!rec) throw AlphaNotFound("no energy-conserving alpha within " + std::to_string(evals) + " evaluations");
    rec->alpha_iters = evals;
    rec->stage_iters = stage_iters;
    return *rec;
  }

  const MethodSpec& method() const { return method_; }

 private:
  MethodSpec method_;
  bool split_on_failure_;
  std::optional<ButcherTableau> tableau_;
};

ErrorEstimate estimate_with(const Stepper& stepper, const HamiltonianSystem& sys, const State& y, double h,
                            const SolverConfig& cfg, double alpha_prev, bool gauss_fallback = false) {
  const StepRecord full = stepper.step(sys, y, h, cfg, alpha_prev, gauss_fallback);
  const StepRecord first = stepper.step(sys, y, 0.5 * h, cfg, alpha_prev, gauss_fallback);
  StepRecord second = stepper.step(sys, first.state, 0.5 * h, cfg, first.alpha, gauss_fallback);

  const int p = stepper.method().order();
  const double err = inf_norm(full.state.y - second.state.y) / (std::ldexp(1.0, p) - 1.0);

  StepRecord rec = second;
  rec.state.t = y.t + h;
  rec.h = h;
  rec.stage_iters = full.stage_iters + first.stage_iters + second.stage_iters;
  rec.alpha_iters = full.alpha_iters + first.alpha_iters + second.alpha_iters;
  rec.flagged = first.flagged || second.flagged;
  rec.substeps = first.substeps + second.substeps;
  rec.err_est = err;
  return {rec, err};
}

}  // namespace

void SolverConfig::validate() const {
  if (!(stage_tol > 0.0) || !(alpha_tol > 0.0)) {
    throw InvalidArgument("integrator", "solver tolerances must be positive");
  }
  if (max_stage_iters < 1 || max_alpha_iters < 1) {
    throw InvalidArgument("integrator", "solver iteration caps must be >= 1");
  }
}

StageSolution solve_stages(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y, double h,
                           const SolverConfig& cfg) {
  if (y.size() != sys.dim()) throw InvalidArgument("integrator", "state dimension does not match system");
  if (!std::isfinite(h)) throw InvalidArgument("integrator", "stepsize must be finite");
  return cfg.strategy == StageStrategy::fixed_point ? solve_fixed_point(t, sys, y, h, cfg)
                                                     : solve_simplified_newton(t, sys, y, h, cfg);
}

double stage_residual(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y, double h,
                      const Matrix& stages) {
  Matrix f(y.size(), t.n_stages);
  for (int j = 0; j < t.n_stages; ++j) f.col(j) = canonical_field(sys, stages.col(j));
  const Matrix r = (stages.colwise() - y) - h * f * t.A.transpose();
  return r.cwiseAbs().maxCoeff();
}

StepRecord rk_step(const ButcherTableau& t, const HamiltonianSystem& sys, const State& y, double h,
                   const SolverConfig& cfg) {
  const StageSolution sol = solve_stages(t, sys, y.y, h, cfg);
  Matrix f(y.y.size(), t.n_stages);
  eval_stage_fields(sys, Vector::Zero(y.y.size()), sol.stages, f);

  StepRecord rec;
  rec.state.t = y.t + h;
  rec.state.y = y.y + h * (f * t.b);
  if (!rec.state.y.allFinite()) throw Divergence("step produced a non-finite state");
  rec.h = h;
  rec.alpha = t.spec.kind == MethodKind::equip ? t.alpha : 0.0;
  rec.stage_iters = sol.iterations;
  return rec;
}

StepRecord equip_step(int s, const HamiltonianSystem& sys, const State& y, double h, const SolverConfig& cfg,
                      double alpha_prev) {
  int evals = 0;
  int stage_iters = 0;
  if (auto rec = tune_alpha(s, sys, y, h, cfg, alpha_prev, evals, stage_iters)) {
    rec->alpha_iters = evals;
    rec->stage_iters = stage_iters;
    return *rec;
  }

  int total_evals = evals;
  int total_stage_iters = stage_iters;
  for (int halvings = 1; halvings <= kMaxEquipHalvings; ++halvings) {
    const int n_sub = 1 << halvings;
    const double h_sub = h / n_sub;
    State current = y;
    double alpha = alpha_prev;
    bool ok = true;
    for (int i = 0; i < n_sub && ok; ++i) {
      evals = 0;
      stage_iters = 0;
      auto sub = tune_alpha(s, sys, current, h_sub, cfg, alpha, evals, stage_iters);
      total_evals += evals;
      total_stage_iters += stage_iters;
      if (!sub) {
        ok = false;
        break;
      }
      current = sub->state;
      alpha = sub->alpha;
    }
    if (ok) {
      StepRecord rec;
      rec.state = current;
      rec.state.t = y.t + h;
      rec.h = h;
      rec.alpha = alpha;
      rec.alpha_iters = total_evals;
      rec.stage_iters = total_stage_iters;
      rec.substeps = n_sub;
      return rec;
    }
  }

  StepRecord rec = rk_step(build_gauss(s), sys, y, h, cfg);
  rec.alpha = 0.0;
  rec.alpha_iters = total_evals;
  rec.stage_iters += total_stage_iters;
  rec.flagged = true;
  return rec;
}

StepRecord method_step(const MethodSpec& method, const HamiltonianSystem& sys, const State& y, double h,
                       const SolverConfig& cfg, double alpha_prev) {
  return Stepper(method).step(sys, y, h, cfg, alpha_prev);
}

std::vector<StepRecord> integrate_fixed(const MethodSpec& method, const HamiltonianSystem& sys, const State& y0,
                                        double h, int n_steps, const SolverConfig& cfg) {
  if (n_steps < 1) throw InvalidArgument("integrator", "integrate_fixed: n_steps must be >= 1");
  cfg.validate();
  const Stepper stepper(method);
  std::vector<StepRecord> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  State current = y0;
  double alpha = 0.0;
  for (int i = 0; i < n_steps; ++i) {
    try {
      StepRecord rec = stepper.step(sys, current, h, cfg, alpha);
      rec.state.t = y0.t + (i + 1) * h;
      current = rec.state;
      alpha = rec.alpha;
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      throw IntegrationFailed(static_cast<std::size_t>(i), e);
    }
  }
  return out;
}

ErrorEstimate error_estimate(const MethodSpec& method, const HamiltonianSystem& sys, const State& y, double h,
                             const SolverConfig& cfg, double alpha_prev) {
  return estimate_with(Stepper(method), sys, y, h, cfg, alpha_prev);
}

double growth_factor(double err_est, double tol, int order) {
  if (err_est <= 0.0) return 5.0;
  const double raw = 0.9 * std::pow(tol / err_est, 1.0 / (order + 1));
  return std::min(5.0, std::max(0.2, raw));
}

AdaptiveRun integrate_adaptive(const MethodSpec& method, const HamiltonianSystem& sys, const State& y0,
                               double t_end, double tol, const SolverConfig& cfg, const AdaptiveOptions& opts,
                               double alpha_prev) {
  if (!(tol > 0.0)) throw InvalidArgument("integrator", "integrate_adaptive: tol must be positive");
  if (!(t_end > y0.t)) throw InvalidArgument("integrator", "integrate_adaptive: t_end must exceed t0");
  if (!(opts.h_init > 0.0) || !(opts.h_min > 0.0)) {
    throw InvalidArgument("integrator", "integrate_adaptive: step bounds must be positive");
  }
  cfg.validate();

  const Stepper stepper(method, false);
  const int p = method.order();
  AdaptiveRun run;
  int alpha_failures = 0;
  run.alpha_last = alpha_prev;
  State current = y0;
  double h_planned = opts.h_init;

  while (current.t < t_end) {
    if (run.n_accepted + run.n_rejected >= opts.max_steps) {
      throw NonConvergence("integrate_adaptive: step budget exhausted at t = " + std::to_string(current.t));
    }
    const double remaining = t_end - current.t;
    double h = std::max(h_planned, opts.h_min);
    bool landing = false;
    if (remaining <= h) {
      h = remaining;
      landing = true;
    } else if (remaining < 2.0 * h) {
      h = 0.5 * remaining;
    }

    double err = std::numeric_limits<double>::infinity();
    std::optional<StepRecord> rec;
    bool alpha_failed = false;
    try {
      const bool fallback = alpha_failures >= kMaxEquipHalvings;
      ErrorEstimate est = estimate_with(stepper, sys, current, h, cfg, run.alpha_last, fallback);
      err = est.err_est;
      rec = std::move(est.step);
    } catch (const AlphaNotFound&) {
      alpha_failed = true;
    } catch (const NonConvergence&) {
    } catch (const Divergence&) {
    }
    const double factor = alpha_failed ? 0.5 : growth_factor(err, tol, p);
    if (alpha_failed) ++alpha_failures;

    if (rec && err <= tol) {
      if (landing) rec->state.t = t_end;
      current = rec->state;
      run.alpha_last = rec->alpha;
      run.steps.push_back(std::move(*rec));
      ++run.n_accepted;
      alpha_failures = 0;
      // A shortened step says little about the natural stepsize; keep the
      // previous proposal unless this one grew beyond it.
      h_planned = h < h_planned ? std::max(h_planned, h * factor) : h * factor;
    } else {
      if (h <= opts.h_min) {
        throw MinStepReached("integrate_adaptive: step rejected at minimum stepsize " +
                             std::to_string(opts.h_min) + " (t = " + std::to_string(current.t) + ")");
      }
      StepRecord rejected;
      rejected.state = current;
      rejected.h = h;
      rejected.accepted = false;
      rejected.err_est = err;
      run.steps.push_back(std::move(rejected));
      ++run.n_rejected;
      h_planned = std::max(h * factor, opts.h_min);
    }
  }
  run.h_next = h_planned;
  return run;
}

}  // namespace geork
