#pragma once

#include <span>
#include <vector>

#include "tikflow/trajectory.hpp"

namespace tikflow::diagnostics {

/// Free parameter b of the Lyapunov energies, b in (0, alpha). The weak energy
/// defaults to alpha/2, the strong one to alpha/4 (it needs b < alpha/2 when
/// gamma > 0).
struct EnergyConfig {
  double b = 0.0;

  static EnergyConfig weak_default(double alpha) { return {alpha / 2.0}; }
  static EnergyConfig strong_default(double alpha) { return {alpha / 4.0}; }
  void validate(double alpha, bool strong, double gamma) const;
};

/// W(t) = g(x) + 1/2 ||v||^2 + eps(t)/2 ||x||^2, nonincreasing along solutions.
double energy_W(const dynamics::DynamicsParams& params, const dynamics::TikhonovSchedule& sched,
                const problems::Objective& obj, const dynamics::State& s);

/// E(t) = t^{2q} (g(x + beta v) - g*) + t^{2q} eps/2 ||x||^2
///        + 1/2 ||b (x - x*) + t^q v||^2 + b(alpha - q t^{q-1} - b)/2 ||x - x*||^2.
/// `coeff_negative` reports alpha - q t^{q-1} - b < 0 (pre-threshold samples).
double energy_weak(const dynamics::DynamicsParams& params, const dynamics::TikhonovSchedule& sched,
                   const problems::Objective& obj, const EnergyConfig& cfg,
                   const dynamics::State& s, bool* coeff_negative = nullptr);

/// E(t) = a(t)(g_t(x + beta v) - g_t(x_t)) + 1/2 ||b (x - x_t) + c(t) v||^2
///        + d(t)/2 ||x - x_t||^2, with c = t^q, d = b(alpha - b - q t^{q-1}) and
/// a(t) = (c^2 - b c beta(t)) / (1 + beta'(t) - alpha beta(t)/t^q + beta(t)^2 eps(t)).
/// g_t(y) = g(y) + eps(t)/2 ||y||^2. `x_t` may be supplied (warm-started curve
/// tracking); otherwise it is solved here. `pre_asymptotic` reports a(t) < 0 or
/// d(t) < 0.
double energy_strong(const dynamics::DynamicsParams& params,
                     const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
                     const EnergyConfig& cfg, const dynamics::State& s,
                     const Vector* x_t = nullptr, bool* pre_asymptotic = nullptr);

struct DiagnosticsConfig {
  EnergyConfig weak;    // b = 0 -> alpha/2
  EnergyConfig strong;  // b = 0 -> alpha/4
  double tikhonov_tol = 1e-12;

  DiagnosticsConfig resolved(double alpha) const;
};

/// All per-sample quantities; exactly two gradient evaluations (at x and at
/// x + beta(t) v) plus one Tikhonov solve.
SampleDiagnostics sample_diagnostics(const dynamics::DynamicsParams& params,
                                     const dynamics::TikhonovSchedule& sched,
                                     const problems::Objective& obj,
                                     const DiagnosticsConfig& cfg, const dynamics::State& s,
                                     const Vector* tik_warm_start = nullptr,
                                     Vector* tik_point_out = nullptr);

/// Fill traj.diagnostics and traj.integrals. The Tikhonov solve is
/// warm-started sample to sample, so this walks samples sequentially.
void annotate(integrator::Trajectory& traj, const dynamics::DynamicsParams& params,
              const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
              const DiagnosticsConfig& cfg = {});

/// Trapezoid accumulators over the sample grid; requires annotated diagnostics
/// and at least 2 samples.
IntegralAccumulators accumulate(const integrator::Trajectory& traj,
                                const dynamics::DynamicsParams& params,
                                const dynamics::TikhonovSchedule& sched);

struct FitResult {
  double slope = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least-squares slope of log y vs log t over the tail window (last
/// tail_fraction of the log-time range), using only y > 0. Throws
/// InsufficientDataError below 10 usable points.
FitResult fit_decay_exponent(std::span<const double> t, std::span<const double> y,
                             double tail_fraction);

}  // namespace tikflow::diagnostics
