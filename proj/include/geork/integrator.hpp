#pragma once

// Implicit Runge-Kutta engine: stage solver, fixed-step driver, EQUIP step
// with per-step alpha tuning, and a step-doubling adaptive driver.

#include <utility>
#include <vector>

#include "geork/dynamics.hpp"
#include "geork/tableau.hpp"

namespace geork {

enum class StageStrategy { fixed_point, simplified_newton };

struct SolverConfig {
  double stage_tol = 1e-13;
  int max_stage_iters = 100;
  StageStrategy strategy = StageStrategy::fixed_point;
  double alpha_tol = 1e-13;
  int max_alpha_iters = 25;

  /// Throws InvalidArgument for nonpositive tolerances or iteration caps.
  void validate() const;
};

struct StepRecord {
  State state;
  double h = 0.0;
  double alpha = 0.0;
  int stage_iters = 0;
  int alpha_iters = 0;
  bool accepted = true;
  double err_est = 0.0;
  bool flagged = false;  // EQUIP fell back to alpha = 0; energy not tuned
  int substeps = 1;      // > 1 when an EQUIP step was split after a failed alpha solve
};

struct StageSolution {
  Matrix stages;  // dim x n_stages, column i is Y_i
  int iterations = 0;
};

/// Solves Y_i = y + h sum_j a_ij f(Y_j). Throws NonConvergence when the
/// iteration budget runs out and Divergence when iterates blow up or leave
/// the domain of H. Once the tolerance is met the iteration continues while
/// the update still shrinks, so stages are converged to round-off.
StageSolution solve_stages(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y,
                           double h, const SolverConfig& cfg);

/// max_i |Y_i - y - h sum_j a_ij f(Y_j)|_inf, recomputed from scratch.
double stage_residual(const ButcherTableau& t, const HamiltonianSystem& sys, const Vector& y, double h,
                      const Matrix& stages);

StepRecord rk_step(const ButcherTableau& t, const HamiltonianSystem& sys, const State& y, double h,
                   const SolverConfig& cfg);

/// EQUIP(s) step: alpha is tuned by a secant iteration (seeded at
/// `alpha_prev`) until |H(y_next) - H(y)| <= alpha_tol (1 + |H(y)|). On failure
/// the step is split into 2, 4, ..., 32 tuned substeps; if that also fails the
/// Gauss step is taken and the record is flagged.
StepRecord equip_step(int s, const HamiltonianSystem& sys, const State& y, double h,
                      const SolverConfig& cfg, double alpha_prev = 0.0);

/// One step of `method`; alpha_prev is only used for equip.
StepRecord method_step(const MethodSpec& method, const HamiltonianSystem& sys, const State& y, double h,
                       const SolverConfig& cfg, double alpha_prev = 0.0);

/// n_steps constant steps. Solver errors are rethrown as IntegrationFailed
/// carrying the failing step index.
std::vector<StepRecord> integrate_fixed(const MethodSpec& method, const HamiltonianSystem& sys,
                                        const State& y0, double h, int n_steps, const SolverConfig& cfg);

struct ErrorEstimate {
  StepRecord step;  // result of the two half steps
  double err_est = 0.0;
};

/// Step doubling: |y_h - y_{h/2,h/2}|_inf / (2^p - 1), p = 2s. The two half
/// step result is returned unextrapolated.
ErrorEstimate error_estimate(const MethodSpec& method, const HamiltonianSystem& sys, const State& y,
                             double h, const SolverConfig& cfg, double alpha_prev = 0.0);

/// min(5, max(0.2, 0.9 (tol / err)^(1/(p+1)))); 5 when err == 0.
double growth_factor(double err_est, double tol, int order);

struct AdaptiveOptions {
  double h_init = 1e-2;
  double h_min = 1e-8;
  long max_steps = 50'000'000;
};

struct AdaptiveRun {
  std::vector<StepRecord> steps;  // accepted and rejected attempts, in order
  double h_next = 0.0;            // controller proposal for a continuation run
  double alpha_last = 0.0;
  long n_accepted = 0;
  long n_rejected = 0;
};

/// Accept/reject controller on error_estimate(). Lands exactly on t_end; when
/// the remainder is between one and two steps it is split evenly. Throws
/// MinStepReached if a step at h_min is rejected.
AdaptiveRun integrate_adaptive(const MethodSpec& method, const HamiltonianSystem& sys, const State& y0,
                               double t_end, double tol, const SolverConfig& cfg,
                               const AdaptiveOptions& opts = {}, double alpha_prev = 0.0);

}  // namespace geork
