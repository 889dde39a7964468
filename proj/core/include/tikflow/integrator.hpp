#pragma once

#include <vector>

#include "tikflow/trajectory.hpp"

namespace tikflow::integrator {

/// Error control and sampling for the adaptive integrator. Local error per
/// step is held below abs_tol + rel_tol * |y| componentwise (RMS norm). The
/// step size is additionally capped at t/10 so step growth tracks the slowly
/// varying coefficients on long horizons.
struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double initial_step = 0.0;          // 0 -> automatic
  double max_step = 0.0;              // absolute cap, 0 -> none
  int samples = 200;                  // log-spaced sample count when sample_times is empty
  std::vector<double> sample_times;   // strictly increasing, within [t0, T]

  void validate(double t0, double T) const;
};

std::vector<double> log_spaced_samples(double t0, double T, int n);

/// Integrate the first-order system over [t0, T] with a Dormand-Prince 5(4)
/// pair; samples are taken from the dense-output interpolant without
/// disturbing step selection. Deterministic: equal inputs give bitwise-equal
/// trajectories.
Trajectory integrate(const dynamics::DynamicsParams& params,
                     const dynamics::TikhonovSchedule& sched,
                     const problems::Objective& obj, const Vector& x0, const Vector& v0,
                     double T, const IntegratorConfig& cfg = {});

/// Fixed-step classical RK4 reference oracle. Steps land exactly on sample
/// times (shortened final sub-steps), preserving 4th order. Requires
/// h <= (T - t0) / 1e4.
Trajectory reference_integrate(const dynamics::DynamicsParams& params,
                               const dynamics::TikhonovSchedule& sched,
                               const problems::Objective& obj, const Vector& x0,
                               const Vector& v0, double T, double h,
                               const std::vector<double>& sample_times = {});

}  // namespace tikflow::integrator
