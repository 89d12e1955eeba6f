#pragma once

// Kepler campaigns: fixed-step convergence (solution, energy and angular
// momentum error against stepsize) and adaptive-step invariant drift.

#include <string>
#include <utility>
#include <vector>

#include "geork/integrator.hpp"

namespace geork {

enum class Observable { solution_error, energy_error, momentum_error };

std::string observable_name(Observable o);

struct ConvergenceSample {
  double h = 0.0;
  double error = 0.0;
  bool floored = false;  // below the round-off floor, excluded from fits
};

struct OrderFit {
  double slope = 0.0;
  double constant = 0.0;  // exp(intercept)
};

struct ConvergenceResult {
  MethodSpec method;
  Observable observable = Observable::solution_error;
  std::vector<ConvergenceSample> samples;  // decreasing h
  bool fitted = false;                     // false when < 3 samples sit above the floor
  double slope = 0.0;
  double constant = 0.0;
  double pinned_constant = 0.0;  // constant refit with slope fixed to the method order 2s
};

/// Least-squares line through (log h, log error). Throws InvalidArgument for
/// fewer than 3 points or nonpositive values.
OrderFit fit_order(const std::vector<std::pair<double, double>>& samples);

/// exp(mean(log error - slope log h)): the constant of a fit with the slope pinned.
double fit_constant(const std::vector<std::pair<double, double>>& samples, double slope);

/// Fits only the samples that are not floored.
OrderFit fit_unfloored(const std::vector<ConvergenceSample>& samples);

/// Round-off floor: 50 eps |I0| for invariants, 1e-12 for the solution.
double roundoff_floor(Observable o, double invariant0);

struct MonotoneCheck {
  bool ok = true;                     // false on an inversion of >= 20% or two in a row
  std::vector<std::size_t> flagged;   // index of every sample whose error exceeds its predecessor's
};

/// On the unfloored samples (decreasing h) errors should decrease.
MonotoneCheck check_monotone(const std::vector<ConvergenceSample>& samples);

struct ConvergenceConfig {
  double e = 0.6;
  int periods = 10;
  std::vector<int> steps_per_period{50, 70, 100, 140, 200};  // h = 2 pi / n
  SolverConfig solver;
  int threads = 0;  // 0 or 1: sequential
};

/// One result per (method, observable), in method order then
/// solution/energy/momentum. Errors are the final-time Euclidean state
/// error and the max-over-run invariant deviations.
std::vector<ConvergenceResult> convergence_study(const std::vector<MethodSpec>& methods,
                                                 const ConvergenceConfig& cfg);

enum class DriftVerdict { conserved, drifting };

std::string verdict_name(DriftVerdict v);

struct DriftFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double growth_ratio = 0.0;  // final / first sample
  DriftVerdict verdict = DriftVerdict::conserved;
};

/// Least-squares slope of deviation against period index (1-based).
/// Drifting iff the slope exceeds three standard errors and the final
/// deviation exceeds `materiality`.
DriftFit classify_drift(const std::vector<double>& deviations, double materiality);

struct DriftReport {
  MethodSpec method;
  std::string invariant;
  std::vector<double> deviations;  // max |I - I0| over the accepted steps of each period
  double drift_slope = 0.0;
  double slope_stderr = 0.0;
  double growth_ratio = 0.0;
  double materiality = 0.0;
  DriftVerdict verdict = DriftVerdict::conserved;
};

struct DriftRunStats {
  MethodSpec method;
  long accepted = 0;
  long rejected = 0;
  long flagged = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double max_step_energy_residual = 0.0;  // max |dH| / (1 + |H|) over unflagged accepted steps
};

struct DriftConfig {
  double e = 0.99;
  int periods = 20;
  double tol = 1e-8;
  SolverConfig solver;
  AdaptiveOptions adaptive;
  int threads = 0;
};

struct DriftStudy {
  std::vector<DriftReport> reports;  // per method: one per invariant, in system order
  std::vector<DriftRunStats> stats;  // per method
};

/// Adaptive runs landing exactly on every period boundary. The materiality
/// threshold of every verdict is the controller tolerance.
DriftStudy drift_study(const std::vector<MethodSpec>& methods, const DriftConfig& cfg);

// CSV output. Numbers use 17 significant digits; identical inputs give
// identical bytes. The write_* functions replace `path` atomically and throw
// IoError naming the path on failure.

/// Header `t,q1..qm,p1..pm,h,alpha,stage_iters,err_H,err_L` with signed
/// deviations from the invariants at `initial`; err_L is blank when the
/// system has no "L" invariant.
std::string format_step_csv(const std::vector<StepRecord>& records, const HamiltonianSystem& sys,
                            const State& initial);
std::string format_convergence_csv(const std::vector<ConvergenceResult>& results);
std::string format_drift_csv(const std::vector<DriftReport>& reports);

void write_step_csv(const std::vector<StepRecord>& records, const HamiltonianSystem& sys, const State& initial,
                    const std::string& path);
void write_convergence_csv(const std::vector<ConvergenceResult>& results, const std::string& path);
void write_drift_csv(const std::vector<DriftReport>& reports, const std::string& path);

/// gnuplot scripts reading the CSVs above (log-log for convergence, linear for drift).
std::string convergence_gnuplot(const std::string& csv_path, const std::vector<ConvergenceResult>& results);
std::string drift_gnuplot(const std::string& csv_path, const std::vector<DriftReport>& reports);
std::string steps_gnuplot(const std::string& csv_path, const HamiltonianSystem& sys);

/// Writes `contents` to `path` via a temporary file and rename.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace geork
