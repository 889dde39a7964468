#include "tikflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace tikflow::dynamics {

namespace {

bool near(double x, double y) {
  return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace

TikhonovSchedule PowerSchedule::as_schedule() const {
  validate();
  std::ostringstream desc;
  desc << "power(a=" << a << ", p=" << p << ")";
  const double aa = a, pp = p;
  return {[aa, pp](double t) { return aa * std::pow(t, -pp); },
          [aa, pp](double t) { return -pp * aa * std::pow(t, -pp - 1.0); }, desc.str()};
}

void PowerSchedule::validate() const {
  if (!(a > 0.0)) throw InputError("schedule.a: must be positive");
  if (!(p > 0.0)) throw InputError("schedule.p: must be positive");
}

TikhonovSchedule named_schedule(const std::string& name, double a, double p) {
  if (name == "power") return PowerSchedule{a, p}.as_schedule();
  if (name == "power_over_log") {
    if (!(a > 0.0) || !(p > 0.0)) throw InputError("schedule: a and p must be positive");
    std::ostringstream desc;
    desc << "power_over_log(a=" << a << ", p=" << p << ")";
    return {[a, p](double t) { return a * std::pow(t, -p) / std::log(std::exp(1.0) + t); },
            [a, p](double t) {
              const double l = std::log(std::exp(1.0) + t);
              return -a * std::pow(t, -p - 1.0) * (p / l + t / ((std::exp(1.0) + t) * l * l));
            },
            desc.str()};
  }
  throw InputError("unknown schedule '" + name + "'");
}

void DynamicsParams::validate() const {
  if (!(alpha > 0.0)) throw InputError("dynamics.alpha: must be positive");
  if (!(q > 0.0 && q < 1.0)) throw InputError("dynamics.q: must lie in (0, 1)");
  if (!(gamma >= 0.0)) throw InputError("dynamics.gamma: must be nonnegative");
  if (gamma == 0.0 && !(beta > 0.0))
    throw InputError("dynamics.beta: must be positive when gamma = 0");
  if (!(t0 > 0.0)) throw InputError("dynamics.t0: must be positive");
  if (beta < 0.0) {
    const double threshold = std::pow(std::abs(beta) / gamma, 1.0 / q);
    if (!(t0 > threshold)) {
      std::ostringstream msg;
      msg << "dynamics.t0: must exceed |beta/gamma|^(1/q) = " << threshold
          << " when beta < 0";
      throw InputError(msg.str());
    }
  }
}

double beta_of(const DynamicsParams& params, double t) {
  if (t < params.t0) throw InputError("beta_of: t < t0");
  return params.gamma + params.beta * std::pow(t, -params.q);
}

Derivative rhs(const DynamicsParams& params, const TikhonovSchedule& sched,
               const problems::Objective& obj, const State& s) {
  if (s.t < params.t0) throw InputError("rhs: t < t0");
  if (s.x.size() != obj.dim() || s.v.size() != obj.dim())
    throw InputError("rhs: state dimension does not match the objective");
  const double bt = params.gamma + params.beta * std::pow(s.t, -params.q);
  const double eps = sched.eval(s.t);
  Vector grad = obj.gradient(s.x + bt * s.v);
  Derivative d;
  d.dx = s.v;
  d.dv = -(params.alpha * std::pow(s.t, -params.q)) * s.v - eps * s.x - grad;
  return d;
}

const char* to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::Weak: return "Weak";
    case RegimeKind::Strong: return "Strong";
    case RegimeKind::Critical: return "Critical";
    case RegimeKind::Outside: return "Outside";
  }
  return "Outside";
}

Regime classify_regime(double p, double q, double a, double alpha, double gamma) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("classify_regime: q must lie in (0, 1)");
  if (!(p > 0.0)) throw InputError("classify_regime: p must be positive");
  if (!(a > 0.0)) throw InputError("classify_regime: a must be positive");

  // Boundary comparisons are real-number statements evaluated on doubles; the
  // near() tolerance keeps p = q + 1 critical when q itself is not exactly
  // representable.
  std::ostringstream why;
  if (near(p, q + 1.0)) {
    why << "p = q + 1 = " << q + 1.0;
    return {RegimeKind::Critical, why.str()};
  }
  if (p > q + 1.0 && (p < 2.0 || near(p, 2.0))) {
    if (near(p, 2.0) && a < q * (1.0 - q) && !near(a, q * (1.0 - q))) {
      why << "p = 2 requires a >= q(1-q) = " << q * (1.0 - q) << ", got a = " << a;
      return {RegimeKind::Outside, why.str()};
    }
    why << "q + 1 < p <= 2 with p = " << p;
    return {RegimeKind::Weak, why.str()};
  }
  if ((p > q || near(p, q)) && p < q + 1.0) {
    if (near(p, q) && gamma > 0.0 && a > alpha / (2.0 * gamma) &&
        !near(a, alpha / (2.0 * gamma))) {
      why << "p = q requires a <= alpha/(2 gamma) = " << alpha / (2.0 * gamma)
          << ", got a = " << a;
      return {RegimeKind::Outside, why.str()};
    }
    why << "q <= p < q + 1 with p = " << p;
    return {RegimeKind::Strong, why.str()};
  }
  if (p < q)
    why << "p = " << p << " < q = " << q;
  else
    why << "p = " << p << " > 2";
  return {RegimeKind::Outside, why.str()};
}

ConditionReport check_conditions(const DynamicsParams& params, const PowerSchedule& sched) {
  params.validate();
  sched.validate();
  const double q = params.q, a = sched.a, p = sched.p;

  ConditionReport rep;
  rep.empirical = false;

  // (C0): q(1-q)/t^2 <= a/t^p <= K/t^q for t large. Upper bound needs p >= q
  // (K = a works eventually); lower bound needs p <= 2, with a >= q(1-q) at p = 2.
  const bool upper = p > q || near(p, q);
  const bool lower = (p < 2.0 && !near(p, 2.0)) ||
                     (near(p, 2.0) && (a > q * (1.0 - q) || near(a, q * (1.0 - q))));
  rep.c0 = upper && lower;
  rep.c0_K = a;

  // (C1): a/t^p >= K1/t^{r+q} for some r in (q, 1) <=> p < q + 1.
  rep.c1 = p < q + 1.0 && !near(p, q + 1.0);
  rep.c1_K1 = a;
  rep.c1_r = (std::max(q, p - q) + 1.0) / 2.0;

  // (C2): vacuous for gamma = 0; otherwise p > q, or p = q with a <= alpha/(2 gamma).
  rep.c2 = params.gamma == 0.0 || p > q ||
           (near(p, q) && (a < params.alpha / (2.0 * params.gamma) ||
                           near(a, params.alpha / (2.0 * params.gamma))));

  // (C3): eps'/eps = -p/t, so K3 = p^2 always works.
  rep.c3 = true;
  rep.c3_K3 = p * p;

  rep.integrable_tq_eps = p > q + 1.0 && !near(p, q + 1.0);
  rep.integrable_t2qm1_eps = p > 2.0 * q && !near(p, 2.0 * q);
  return rep;
}

ConditionReport check_conditions_sampled(const DynamicsParams& params,
                                         const TikhonovSchedule& sched) {
  params.validate();

  // Estimate the tail exponent of eps on a 64-point log grid over [t0, 1e6],
  // then reuse the exact exponent logic on the estimate. Asymptotic "for t
  // large enough" statements are judged on the top half of the grid.
  constexpr int kGrid = 64;
  std::vector<double> ts(kGrid), eps(kGrid);
  const double lt0 = std::log(params.t0), lt1 = std::log(1e6);
  for (int i = 0; i < kGrid; ++i) {
    ts[i] = std::exp(lt0 + (lt1 - lt0) * i / (kGrid - 1));
    eps[i] = sched.eval(ts[i]);
    if (!(eps[i] >= 0.0)) throw InputError("schedule: eps(t) must be nonnegative");
  }
  for (int i = 1; i < kGrid; ++i) {
    if (eps[i] > eps[i - 1] * (1.0 + 1e-12))
      throw InputError("schedule: eps(t) must be nonincreasing");
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int i = kGrid / 2; i < kGrid; ++i) {
    if (eps[i] <= 0.0) continue;
    const double x = std::log(ts[i]), y = std::log(eps[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 4) throw InputError("schedule: eps vanished on the sampling grid");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double p_hat = -slope;
  // Median of eps(t) t^{p_hat} over the tail as the amplitude estimate.
  std::vector<double> amps;
  for (int i = kGrid / 2; i < kGrid; ++i)
    if (eps[i] > 0.0) amps.push_back(eps[i] * std::pow(ts[i], p_hat));
  std::nth_element(amps.begin(), amps.begin() + amps.size() / 2, amps.end());
  const double a_hat = amps[amps.size() / 2];

  ConditionReport rep = check_conditions(params, PowerSchedule{a_hat, p_hat});
  rep.empirical = true;
  return rep;
}

}  // namespace tikflow::dynamics
