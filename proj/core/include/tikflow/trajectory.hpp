#pragma once

#include <string>
#include <vector>

#include "tikflow/dynamics.hpp"

namespace tikflow::diagnostics {

/// Per-sample derived quantities along a trajectory. Gaps are measured against
/// the true minimum g*; the shifted variants evaluate at x + beta(t) v.
struct SampleDiagnostics {
  double gap_shifted = 0.0;        // g(x + beta(t) v) - g*
  double gap_plain = 0.0;          // g(x) - g*
  double speed = 0.0;              // ||v||
  double grad_shifted_norm = 0.0;  // ||grad g(x + beta(t) v)||
  double reg_grad_norm = 0.0;      // ||grad g(x + beta(t) v) + eps(t) x||
  double dist_to_xstar = 0.0;      // ||x - x*||
  double dist_to_tikhonov = 0.0;   // ||x - x_{eps(t)}||
  double W = 0.0;
  double E_weak = 0.0;
  double E_strong = 0.0;
  bool weak_coeff_negative = false;     // alpha - q t^{q-1} - b < 0 at this sample
  bool strong_pre_asymptotic = false;   // a(t) < 0 or d(t) < 0 at this sample
};

/// One weighted time-integral, accumulated by the trapezoid rule on the sample
/// grid. `last_decade_increment` covers [T/10, T].
struct Accumulator {
  double total = 0.0;
  double last_decade_increment = 0.0;
};

struct IntegralAccumulators {
  Accumulator I_speed;       // t^q ||v||^2
  Accumulator I_gap;         // t^q (g(x + beta v) - g*)
  Accumulator I_grad2q;      // t^{2q} ||grad||^2
  Accumulator I_grad2qm1;    // t^{2q-1} ||grad||^2
  Accumulator I_reg_grad;    // t^{2q} ||grad + eps x||^2
  Accumulator I_eps_x;       // t^q eps(t) ||x||^2
};

}  // namespace tikflow::diagnostics

namespace tikflow::integrator {

struct IntegratorStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long gradient_evals = 0;
};

struct TrajectoryMeta {
  std::string objective_id;
  dynamics::DynamicsParams params;
  std::string schedule_description;
  double T = 0.0;
  IntegratorStats stats;
};

/// Time-ordered samples of (t, x, v) with optional per-sample diagnostics and
/// integral accumulators (filled by the diagnostics module).
struct Trajectory {
  std::vector<dynamics::State> samples;
  std::vector<diagnostics::SampleDiagnostics> diagnostics;
  diagnostics::IntegralAccumulators integrals;
  TrajectoryMeta meta;
};

}  // namespace tikflow::integrator
