#pragma once

#include <functional>
#include <string>

#include "tikflow/common.hpp"

namespace tikflow::dynamics {

/// Tikhonov regularization schedule eps(t): nonincreasing, C^1, vanishing.
struct TikhonovSchedule {
  std::function<double(double)> eval;   // eps(t) >= 0
  std::function<double(double)> deriv;  // d/dt eps(t) <= 0
  std::string description;
};

/// eps(t) = a * t^{-p}. The specialization that all exact condition logic runs on.
struct PowerSchedule {
  double a = 1.0;
  double p = 1.0;

  double eval(double t) const { return a * std::pow(t, -p); }
  double deriv(double t) const { return -p * a * std::pow(t, -p - 1.0); }

  TikhonovSchedule as_schedule() const;
  void validate() const;
};

/// Named non-power schedules exercising the sampled condition checks.
/// Currently "power_over_log": eps(t) = a * t^{-p} / log(e + t).
TikhonovSchedule named_schedule(const std::string& name, double a, double p);

}  // namespace tikflow::dynamics
