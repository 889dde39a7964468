#pragma once

#include <string>

#include "tikflow/common.hpp"
#include "tikflow/problems.hpp"
#include "tikflow/schedule.hpp"

namespace tikflow::dynamics {

/// Parameters of the damped inertial system
///   x'' + (alpha/t^q) x' + grad g(x + (gamma + beta/t^q) x') + eps(t) x = 0.
/// Admissibility: alpha > 0, 0 < q < 1, and either gamma > 0 (beta free) or
/// gamma = 0 with beta > 0. For beta < 0 additionally t0 > |beta/gamma|^{1/q},
/// which keeps the extrapolation coefficient positive on [t0, inf).
struct DynamicsParams {
  double alpha = 2.0;
  double q = 0.5;
  double gamma = 1.0;
  double beta = 0.0;
  double t0 = 1.0;

  void validate() const;  // throws InputError with the violated constraint
};

/// gamma + beta * t^{-q}, positive for all t >= t0 under the admissibility rules.
double beta_of(const DynamicsParams& params, double t);

struct State {
  double t = 0.0;
  Vector x;
  Vector v;
};

struct Derivative {
  Vector dx;
  Vector dv;
};

/// First-order vector field: dx = v, dv = -(alpha/t^q) v - eps(t) x - grad g(x + beta(t) v).
/// Exactly one gradient evaluation per call; deterministic and side-effect free.
Derivative rhs(const DynamicsParams& params, const TikhonovSchedule& sched,
               const problems::Objective& obj, const State& s);

enum class RegimeKind { Weak, Strong, Critical, Outside };

struct Regime {
  RegimeKind kind = RegimeKind::Outside;
  std::string rationale;
};

const char* to_string(RegimeKind kind);

/// Classify eps(t) = a/t^p against the damping exponent q:
///   Weak     q+1 < p <= 2, and a >= q(1-q) when p = 2
///   Strong   q <= p < q+1, and a <= alpha/(2 gamma) when p = q, gamma > 0
///   Critical p = q+1
///   Outside  otherwise (rationale names the violated inequality)
Regime classify_regime(double p, double q, double a, double alpha, double gamma);

/// Evaluation of the standing conditions on the schedule. For power schedules
/// these are exact exponent inequalities; the sampled variant estimates the
/// tail exponent on a log grid and is flagged `empirical`.
struct ConditionReport {
  bool c0 = false;       // q(1-q)/t^2 <= eps(t) <= K/t^q eventually
  double c0_K = 0.0;
  bool c1 = false;       // eps(t) >= K1/t^{r+q} eventually, some r in (q,1)
  double c1_K1 = 0.0;
  double c1_r = 0.0;
  bool c2 = false;       // gamma == 0, or eps(t) <= alpha/(2 gamma t^q) eventually
  bool c3 = false;       // (eps'/eps)^2 <= K3/t^2 eventually
  double c3_K3 = 0.0;
  bool integrable_tq_eps = false;      // integral of t^q eps(t) finite
  bool integrable_t2qm1_eps = false;   // integral of t^{2q-1} eps(t) finite
  bool empirical = false;
};

ConditionReport check_conditions(const DynamicsParams& params, const PowerSchedule& sched);

/// Sampled fallback for non-power schedules: 64-point log grid over [t0, 1e6].
ConditionReport check_conditions_sampled(const DynamicsParams& params,
                                         const TikhonovSchedule& sched);

}  // namespace tikflow::dynamics
