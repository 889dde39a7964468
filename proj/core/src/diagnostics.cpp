#include "tikflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace tikflow::diagnostics {

void EnergyConfig::validate(double alpha, bool strong, double gamma) const {
  if (!(b > 0.0 && b < alpha)) throw InputError("energy.b: must lie in (0, alpha)");
  if (strong && gamma > 0.0 && !(b < alpha / 2.0))
    throw InputError("energy.b: strong energy needs b < alpha/2 when gamma > 0");
}

DiagnosticsConfig DiagnosticsConfig::resolved(double alpha) const {
  DiagnosticsConfig out = *this;
  if (out.weak.b == 0.0) out.weak = EnergyConfig::weak_default(alpha);
  if (out.strong.b == 0.0) out.strong = EnergyConfig::strong_default(alpha);
  return out;
}

double energy_W(const dynamics::DynamicsParams& /*params*/,
                const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
                const dynamics::State& s) {
  const double eps = sched.eval(s.t);
  return obj.value(s.x) + 0.5 * s.v.squaredNorm() + 0.5 * eps * s.x.squaredNorm();
}

double energy_weak(const dynamics::DynamicsParams& params, const dynamics::TikhonovSchedule& sched,
                   const problems::Objective& obj, const EnergyConfig& cfg,
                   const dynamics::State& s, bool* coeff_negative) {
  cfg.validate(params.alpha, false, params.gamma);
  const double t = s.t;
  const double q = params.q;
  const double b = cfg.b;
  const double eps = sched.eval(t);
  const double bt = dynamics::beta_of(params, t);
  const double t_q = std::pow(t, q);
  const double t_2q = t_q * t_q;
  const Vector& xstar = obj.minimal_norm_minimizer();
  const double coeff = params.alpha - q * std::pow(t, q - 1.0) - b;
  if (coeff_negative) *coeff_negative = coeff < 0.0;

  const double gap = obj.value(s.x + bt * s.v) - obj.min_value();
  return t_2q * gap + 0.5 * t_2q * eps * s.x.squaredNorm() +
         0.5 * (b * (s.x - xstar) + t_q * s.v).squaredNorm() +
         0.5 * b * coeff * (s.x - xstar).squaredNorm();
}

double energy_strong(const dynamics::DynamicsParams& params,
                     const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
                     const EnergyConfig& cfg, const dynamics::State& s, const Vector* x_t_in,
                     bool* pre_asymptotic) {
  cfg.validate(params.alpha, true, params.gamma);
  const double t = s.t;
  const double q = params.q;
  const double b = cfg.b;
  const double eps = sched.eval(t);
  const double bt = dynamics::beta_of(params, t);
  const double bt_prime = -q * params.beta * std::pow(t, -q - 1.0);
  const double c = std::pow(t, q);
  const double d = b * (params.alpha - b - q * std::pow(t, q - 1.0));
  const double denom = 1.0 + bt_prime - params.alpha * bt / std::pow(t, q) + bt * bt * eps;
  const double a = (c * c - b * c * bt) / denom;
  if (pre_asymptotic) *pre_asymptotic = !(a >= 0.0) || !(d >= 0.0) || !std::isfinite(a);

  Vector x_t = x_t_in ? *x_t_in : problems::tikhonov_point(obj, eps);
  const auto g_t = [&](const Vector& y) { return obj.value(y) + 0.5 * eps * y.squaredNorm(); };
  const double gap_t = g_t(s.x + bt * s.v) - g_t(x_t);
  return a * gap_t + 0.5 * (b * (s.x - x_t) + c * s.v).squaredNorm() +
         0.5 * d * (s.x - x_t).squaredNorm();
}

SampleDiagnostics sample_diagnostics(const dynamics::DynamicsParams& params,
                                     const dynamics::TikhonovSchedule& sched,
                                     const problems::Objective& obj,
                                     const DiagnosticsConfig& cfg_in, const dynamics::State& s,
                                     const Vector* tik_warm_start, Vector* tik_point_out) {
  const DiagnosticsConfig cfg = cfg_in.resolved(params.alpha);
  cfg.weak.validate(params.alpha, false, params.gamma);
  cfg.strong.validate(params.alpha, true, params.gamma);

  const double t = s.t;
  const double q = params.q;
  const double eps = sched.eval(t);
  const double bt = dynamics::beta_of(params, t);
  const double t_q = std::pow(t, q);
  const Vector& xstar = obj.minimal_norm_minimizer();

  const problems::Evaluation at_x = obj.eval(s.x);
  const Vector shifted = s.x + bt * s.v;
  const problems::Evaluation at_shifted = obj.eval(shifted);

  SampleDiagnostics diag;
  diag.gap_shifted = at_shifted.value - obj.min_value();
  diag.gap_plain = at_x.value - obj.min_value();
  diag.speed = s.v.norm();
  diag.grad_shifted_norm = at_shifted.gradient.norm();
  diag.reg_grad_norm = (at_shifted.gradient + eps * s.x).norm();
  diag.dist_to_xstar = (s.x - xstar).norm();
  diag.W = at_x.value + 0.5 * s.v.squaredNorm() + 0.5 * eps * s.x.squaredNorm();

  Vector x_t = eps > 0.0 ? problems::tikhonov_point(obj, eps, cfg.tikhonov_tol, tik_warm_start)
                         : xstar;
  diag.dist_to_tikhonov = (s.x - x_t).norm();

  // Weak energy, reusing the shifted evaluation.
  {
    const double b = cfg.weak.b;
    const double coeff = params.alpha - q * std::pow(t, q - 1.0) - b;
    diag.weak_coeff_negative = coeff < 0.0;
    diag.E_weak = t_q * t_q * diag.gap_shifted + 0.5 * t_q * t_q * eps * s.x.squaredNorm() +
                  0.5 * (b * (s.x - xstar) + t_q * s.v).squaredNorm() +
                  0.5 * b * coeff * diag.dist_to_xstar * diag.dist_to_xstar;
  }

  // Strong energy against the Tikhonov point already solved above.
  {
    const double b = cfg.strong.b;
    const double bt_prime = -q * params.beta * std::pow(t, -q - 1.0);
    const double c = t_q;
    const double d = b * (params.alpha - b - q * std::pow(t, q - 1.0));
    const double denom = 1.0 + bt_prime - params.alpha * bt / t_q + bt * bt * eps;
    const double a = (c * c - b * c * bt) / denom;
    diag.strong_pre_asymptotic = !(a >= 0.0) || !(d >= 0.0) || !std::isfinite(a);
    const double gt_shifted = at_shifted.value + 0.5 * eps * shifted.squaredNorm();
    const double gt_tik = obj.value(x_t) + 0.5 * eps * x_t.squaredNorm();
    diag.E_strong = a * (gt_shifted - gt_tik) +
                    0.5 * (b * (s.x - x_t) + c * s.v).squaredNorm() +
                    0.5 * d * (s.x - x_t).squaredNorm();
  }

  if (tik_point_out) *tik_point_out = std::move(x_t);
  return diag;
}

void annotate(integrator::Trajectory& traj, const dynamics::DynamicsParams& params,
              const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
              const DiagnosticsConfig& cfg) {
  traj.diagnostics.clear();
  traj.diagnostics.reserve(traj.samples.size());
  Vector warm;
  bool have_warm = false;
  for (const auto& s : traj.samples) {
    Vector x_t;
    traj.diagnostics.push_back(
        sample_diagnostics(params, sched, obj, cfg, s, have_warm ? &warm : nullptr, &x_t));
    warm = std::move(x_t);
    have_warm = true;
  }
  if (traj.samples.size() >= 2) traj.integrals = accumulate(traj, params, sched);
}

IntegralAccumulators accumulate(const integrator::Trajectory& traj,
                                const dynamics::DynamicsParams& params,
                                const dynamics::TikhonovSchedule& sched) {
  const auto& samples = traj.samples;
  const auto& diag = traj.diagnostics;
  if (samples.size() < 2) throw InputError("accumulate: need at least 2 samples");
  if (diag.size() != samples.size())
    throw InputError("accumulate: trajectory is not annotated");

  const double q = params.q;
  const double decade_start = samples.back().t / 10.0;

  struct Integrand {
    Accumulator* acc;
    std::vector<double> f;
  };
  IntegralAccumulators out;
  const std::size_t n = samples.size();
  std::vector<double> f_speed(n), f_gap(n), f_grad2q(n), f_grad2qm1(n), f_reg(n), f_epsx(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = samples[k].t;
    const double t_q = std::pow(t, q);
    const double grad2 = diag[k].grad_shifted_norm * diag[k].grad_shifted_norm;
    f_speed[k] = t_q * diag[k].speed * diag[k].speed;
    f_gap[k] = t_q * diag[k].gap_shifted;
    f_grad2q[k] = t_q * t_q * grad2;
    f_grad2qm1[k] = t_q * t_q / t * grad2;
    f_reg[k] = t_q * t_q * diag[k].reg_grad_norm * diag[k].reg_grad_norm;
    f_epsx[k] = t_q * sched.eval(t) * samples[k].x.squaredNorm();
  }
  const Integrand integrands[] = {{&out.I_speed, std::move(f_speed)},
                                  {&out.I_gap, std::move(f_gap)},
                                  {&out.I_grad2q, std::move(f_grad2q)},
                                  {&out.I_grad2qm1, std::move(f_grad2qm1)},
                                  {&out.I_reg_grad, std::move(f_reg)},
                                  {&out.I_eps_x, std::move(f_epsx)}};
  for (const auto& ig : integrands) {
    double total = 0.0, tail = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double panel =
          0.5 * (ig.f[k] + ig.f[k + 1]) * (samples[k + 1].t - samples[k].t);
      total += panel;
      if (samples[k].t >= decade_start) tail += panel;
    }
    ig.acc->total = total;
    ig.acc->last_decade_increment = tail;
  }
  return out;
}

FitResult fit_decay_exponent(std::span<const double> t, std::span<const double> y,
                             double tail_fraction) {
  if (t.size() != y.size()) throw InputError("fit_decay_exponent: mismatched series lengths");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw InputError("fit_decay_exponent: tail_fraction must lie in (0, 1]");
  if (t.empty()) throw InsufficientDataError("fit_decay_exponent: empty series");

  const double l0 = std::log(t.front()), l1 = std::log(t.back());
  const double cutoff = l1 - tail_fraction * (l1 - l0);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(t[i]);
    if (lx < cutoff) continue;
    xs.push_back(lx);
    ys.push_back(std::log(y[i]));
  }
  if (xs.size() < 10) {
    std::ostringstream msg;
    msg << "fit_decay_exponent: only " << xs.size() << " positive points in the tail window";
    throw InsufficientDataError(msg.str());
  }

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  FitResult res;
  res.points = static_cast<int>(xs.size());
  res.slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - res.slope * sx) / n;
  double ssr = 0, sst = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (res.slope * xs[i] + intercept);
    ssr += e * e;
    sst += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  res.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  return res;
}

}  // namespace tikflow::diagnostics
