#include "geork/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "geork/error.hpp"
#include "numfmt.hpp"

namespace geork {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Runs job(i) for i in [0, n). Each job owns its output slot, so results do
// not depend on scheduling. The first failure by index is rethrown.
template <class Job>
void run_jobs(std::size_t n, int threads, Job&& job) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      job(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = threads > 1 ? std::min<std::size_t>(static_cast<std::size_t>(threads), n) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct GridCell {
  double h = 0.0;
  double solution_error = 0.0;
  double energy_error = 0.0;
  double momentum_error = 0.0;
};

}  // namespace

std::string observable_name(Observable o) {
  switch (o) {
    case Observable::solution_error: return "solution_error";
    case Observable::energy_error: return "energy_error";
    case Observable::momentum_error: return "momentum_error";
  }
  return "unknown";
}

std::string verdict_name(DriftVerdict v) { return v == DriftVerdict::drifting ? "drifting" : "conserved"; }

OrderFit fit_order(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw InvalidArgument("experiments", "fit_order: at least 3 samples required");
  double sx = 0.0, sy = 0.0;
  for (const auto& [h, err] : samples) {
    if (!(h > 0.0) || !(err > 0.0)) throw InvalidArgument("experiments", "fit_order: samples must be positive");
    sx += std::log(h);
    sy += std::log(err);
  }
  const double n = static_cast<double>(samples.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [h, err] : samples) {
    const double dx = std::log(h) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err) - my);
  }
  if (sxx == 0.0) throw InvalidArgument("experiments", "fit_order: stepsizes must not all coincide");
  const double slope = sxy / sxx;
  return {slope, std::exp(my - slope * mx)};
}

double fit_constant(const std::vector<std::pair<double, double>>& samples, double slope) {
  if (samples.empty()) throw InvalidArgument("experiments", "fit_constant: no samples");
  double acc = 0.0;
  for (const auto& [h, err] : samples) {
    if (!(h > 0.0) || !(err > 0.0)) throw InvalidArgument("experiments", "fit_constant: samples must be positive");
    acc += std::log(err) - slope * std::log(h);
  }
  return std::exp(acc / static_cast<double>(samples.size()));
}

namespace {

std::vector<std::pair<double, double>> unfloored_pairs(const std::vector<ConvergenceSample>& samples) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : samples) {
    if (!s.floored) pts.emplace_back(s.h, s.error);
  }
  return pts;
}

}  // namespace

OrderFit fit_unfloored(const std::vector<ConvergenceSample>& samples) {
  return fit_order(unfloored_pairs(samples));
}

double roundoff_floor(Observable o, double invariant0) {
  return o == Observable::solution_error ? 1e-12 : 50.0 * kEps * std::abs(invariant0);
}

MonotoneCheck check_monotone(const std::vector<ConvergenceSample>& samples) {
  MonotoneCheck out;
  const ConvergenceSample* prev = nullptr;
  bool prev_inverted = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].floored) continue;
    bool inverted = false;
    if (prev && samples[i].error > prev->error) {
      inverted = true;
      out.flagged.push_back(i);
      if (samples[i].error >= 1.2 * prev->error || prev_inverted) out.ok = false;
    }
    prev_inverted = inverted;
    prev = &samples[i];
  }
  return out;
}

std::vector<ConvergenceResult> convergence_study(const std::vector<MethodSpec>& methods,
                                                 const ConvergenceConfig& cfg) {
  if (cfg.periods < 1) throw InvalidArgument("experiments", "convergence_study: periods must be >= 1");
  if (cfg.steps_per_period.empty()) throw InvalidArgument("experiments", "convergence_study: empty stepsize grid");
  for (const auto& m : methods) validate(m);
  std::vector<int> grid = cfg.steps_per_period;
  for (int n : grid) {
    if (n < 1) throw InvalidArgument("experiments", "convergence_study: steps per period must be >= 1");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto [sys, y0] = kepler_system(cfg.e);
  const double h0 = sys.energy(y0.y);
  const double l0 = angular_momentum(y0.y);
  const double t_final = cfg.periods * kTwoPi;
  const Vector exact = kepler_reference(cfg.e, t_final);

  std::vector<GridCell> cells(methods.size() * grid.size());
  run_jobs(cells.size(), cfg.threads, [&](std::size_t idx) {
    const MethodSpec& m = methods[idx / grid.size()];
    const int n = grid[idx % grid.size()];
    const double h = kTwoPi / n;
    std::vector<StepRecord> steps;
    try {
      steps = integrate_fixed(m, sys, y0, h, n * cfg.periods, cfg.solver);
    } catch (const Error& e) {
      throw Error(e.module(), "convergence " + display_name(m) + " h=2pi/" + std::to_string(n) + ": " + e.what());
    }
    GridCell cell;
    cell.h = h;
    cell.solution_error = (steps.back().state.y - exact).norm();
    for (const auto& r : steps) {
      cell.energy_error = std::max(cell.energy_error, std::abs(sys.energy(r.state.y) - h0));
      cell.momentum_error = std::max(cell.momentum_error, std::abs(angular_momentum(r.state.y) - l0));
    }
    cells[idx] = cell;
  });

  std::vector<ConvergenceResult> out;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (Observable o : {Observable::solution_error, Observable::energy_error, Observable::momentum_error}) {
      const double floor =
          roundoff_floor(o, o == Observable::energy_error ? h0 : (o == Observable::momentum_error ? l0 : 0.0));
      ConvergenceResult res;
      res.method = methods[mi];
      res.observable = o;
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const GridCell& c = cells[mi * grid.size() + gi];
        const double err = o == Observable::solution_error ? c.solution_error
                           : o == Observable::energy_error ? c.energy_error
                                                           : c.momentum_error;
        res.samples.push_back({c.h, err, !(err >= floor) || err == 0.0});
      }
      const auto pts = unfloored_pairs(res.samples);
      if (pts.size() >= 3) {
        const OrderFit fit = fit_order(pts);
        res.fitted = true;
        res.slope = fit.slope;
        res.constant = fit.constant;
        res.pinned_constant = fit_constant(pts, methods[mi].order());
      }
      out.push_back(std::move(res));
    }
  }
  return out;
}

DriftFit classify_drift(const std::vector<double>& deviations, double materiality) {
  const std::size_t n = deviations.size();
  if (n < 3) throw InvalidArgument("experiments", "classify_drift: at least 3 periods required");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += static_cast<double>(i + 1);
    my += deviations[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i + 1) - mx;
    sxx += dx * dx;
    sxy += dx * (deviations[i] - my);
  }
  DriftFit fit;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = deviations[i] - (intercept + fit.slope * static_cast<double>(i + 1));
    sse += r * r;
  }
  fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  fit.growth_ratio = deviations.front() > 0.0 ? deviations.back() / deviations.front()
                                              : std::numeric_limits<double>::infinity();
  const bool significant = fit.slope > 3.0 * fit.slope_stderr;
  fit.verdict = significant && deviations.back() > materiality ? DriftVerdict::drifting : DriftVerdict::conserved;
  return fit;
}

DriftStudy drift_study(const std::vector<MethodSpec>& methods, const DriftConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw InvalidArgument("experiments", "drift_study: tol must be positive");
  if (cfg.periods < 3) throw InvalidArgument("experiments", "drift_study: at least 3 periods required");
  for (const auto& m : methods) validate(m);

  const auto [sys, y0] = kepler_system(cfg.e);
  const std::size_t n_inv = sys.invariants.size();
  std::vector<double> inv0(n_inv);
  for (std::size_t k = 0; k < n_inv; ++k) inv0[k] = sys.invariants[k].eval(y0.y);

  struct MethodRun {
    std::vector<std::vector<double>> deviations;  // [invariant][period]
    DriftRunStats stats;
  };
  std::vector<MethodRun> runs(methods.size());

  run_jobs(methods.size(), cfg.threads, [&](std::size_t mi) {
    const MethodSpec& m = methods[mi];
    MethodRun run;
    run.deviations.assign(n_inv, std::vector<double>(static_cast<std::size_t>(cfg.periods), 0.0));
    run.stats.method = m;
    run.stats.h_min = std::numeric_limits<double>::infinity();

    State current = y0;
    double h_prev_energy = sys.energy(y0.y);
    AdaptiveOptions opts = cfg.adaptive;
    double alpha = 0.0;
    for (int p = 1; p <= cfg.periods; ++p) {
      AdaptiveRun seg;
      try {
        seg = integrate_adaptive(m, sys, current, p * kTwoPi, cfg.tol, cfg.solver, opts, alpha);
      } catch (const Error& e) {
        throw Error(e.module(), "drift " + display_name(m) + " period " + std::to_string(p) + ": " + e.what());
      }
      for (const auto& r : seg.steps) {
        if (!r.accepted) continue;
        for (std::size_t k = 0; k < n_inv; ++k) {
          auto& slot = run.deviations[k][static_cast<std::size_t>(p - 1)];
          slot = std::max(slot, std::abs(sys.invariants[k].eval(r.state.y) - inv0[k]));
        }
        const double h_now = sys.energy(r.state.y);
        if (r.flagged) {
          ++run.stats.flagged;
        } else {
          run.stats.max_step_energy_residual = std::max(run.stats.max_step_energy_residual,
                                                        std::abs(h_now - h_prev_energy) / (1.0 + std::abs(h_prev_energy)));
        }
        h_prev_energy = h_now;
        run.stats.h_min = std::min(run.stats.h_min, r.h);
        run.stats.h_max = std::max(run.stats.h_max, r.h);
        current = r.state;
      }
      // Every period lands exactly on its boundary.
      current.t = p * kTwoPi;
      run.stats.accepted += seg.n_accepted;
      run.stats.rejected += seg.n_rejected;
      opts.h_init = seg.h_next;
      alpha = seg.alpha_last;
    }
    runs[mi] = std::move(run);
  });

  DriftStudy study;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t k = 0; k < n_inv; ++k) {
      DriftReport rep;
      rep.method = methods[mi];
      rep.invariant = sys.invariants[k].name;
      rep.deviations = runs[mi].deviations[k];
      rep.materiality = cfg.tol;
      const DriftFit fit = classify_drift(rep.deviations, rep.materiality);
      rep.drift_slope = fit.slope;
      rep.slope_stderr = fit.slope_stderr;
      rep.growth_ratio = fit.growth_ratio;
      rep.verdict = fit.verdict;
      study.reports.push_back(std::move(rep));
    }
    study.stats.push_back(runs[mi].stats);
  }
  return study;
}

}  // namespace geork
