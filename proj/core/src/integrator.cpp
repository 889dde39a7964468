#include "tikflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tikflow::integrator {

namespace {

// Dormand-Prince 5(4) tableau (Hairer-Norsett-Wanner DOPRI5), FSAL.
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense-output coefficients of the 4th-order continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Step-control constants (Lund stabilization).
constexpr double kSafe = 0.9;
constexpr double kFacL = 0.2;   // max step decrease factor is 1/..., increase 1/kFacL
constexpr double kFacR = 10.0;
constexpr double kBeta = 0.04;
constexpr double kProportionalCap = 0.1;  // h <= t/10 on long horizons

struct FlatSystem {
  const dynamics::DynamicsParams& params;
  const dynamics::TikhonovSchedule& sched;
  const problems::Objective& obj;
  long evals = 0;

  // y = [x; v] stacked.
  Vector operator()(double t, const Vector& y) {
    ++evals;
    const int d = obj.dim();
    const double bt = params.gamma + params.beta * std::pow(t, -params.q);
    const double eps = sched.eval(t);
    Vector grad = obj.gradient(y.head(d) + bt * y.tail(d));
    Vector f(2 * d);
    f.head(d) = y.tail(d);
    f.tail(d) = -(params.alpha * std::pow(t, -params.q)) * y.tail(d) - eps * y.head(d) - grad;
    return f;
  }
};

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double abs_tol,
                  double rel_tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    if (err[i] == 0.0) continue;  // keeps the identically-zero trajectory stepping
    const double scale = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step_guess(FlatSystem& f, double t0, const Vector& y0, const Vector& f0,
                          double abs_tol, double rel_tol, double span) {
  // Components at exactly zero would make the scale collapse when abs_tol is
  // tiny (pure-relative runs), so the state norm enters the scale as well.
  const double ref = y0.cwiseAbs().maxCoeff();
  const auto scale = [&](double yi) { return abs_tol + rel_tol * std::max(std::abs(yi), ref); };
  double dnf = 0.0, dny = 0.0;
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    dnf += (f0[i] / scale(y0[i])) * (f0[i] / scale(y0[i]));
    dny += (y0[i] / scale(y0[i])) * (y0[i] / scale(y0[i]));
  }
  double h = (!std::isfinite(dnf) || !std::isfinite(dny) || dnf <= 1e-10 || dny <= 1e-10)
                 ? 1e-6
                 : 0.01 * std::sqrt(dny / dnf);
  h = std::min(h, span);
  Vector y1 = y0 + h * f0;
  Vector f1 = f(t0 + h, y1);
  double der2 = 0.0;
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    const double diff = (f1[i] - f0[i]) / scale(y0[i]);
    der2 += diff * diff;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  double h1 = (!std::isfinite(der12) || der12 <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                                        : std::pow(0.01 / der12, 0.2);
  h1 = std::min({100.0 * h, h1, span});
  if (!(h1 > 0.0) || !std::isfinite(h1)) h1 = std::min(1e-6, span);
  return h1;
}

dynamics::State unpack(double t, const Vector& y, int d) {
  return {t, y.head(d), y.tail(d)};
}

}  // namespace

std::vector<double> log_spaced_samples(double t0, double T, int n) {
  if (!(t0 > 0.0) || !(T > t0)) throw InputError("log_spaced_samples: need 0 < t0 < T");
  if (n < 2) throw InputError("log_spaced_samples: need at least 2 points");
  std::vector<double> ts(n);
  const double l0 = std::log(t0), l1 = std::log(T);
  for (int i = 0; i < n; ++i) ts[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  ts.front() = t0;
  ts.back() = T;
  return ts;
}

void IntegratorConfig::validate(double t0, double T) const {
  if (!(rel_tol > 0.0)) throw InputError("integrator.rel_tol: must be positive");
  if (!(abs_tol > 0.0)) throw InputError("integrator.abs_tol: must be positive");
  if (initial_step < 0.0) throw InputError("integrator.initial_step: must be nonnegative");
  if (max_step < 0.0) throw InputError("integrator.max_step: must be nonnegative");
  if (sample_times.empty()) {
    if (samples < 2) throw InputError("integrator.samples: need at least 2");
    return;
  }
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (i > 0 && !(sample_times[i] > sample_times[i - 1]))
      throw InputError("integrator.sample_times: must be strictly increasing");
  }
  if (sample_times.front() < t0 || sample_times.back() > T)
    throw InputError("integrator.sample_times: must lie within [t0, T]");
}

Trajectory integrate(const dynamics::DynamicsParams& params,
                     const dynamics::TikhonovSchedule& sched, const problems::Objective& obj,
                     const Vector& x0, const Vector& v0, double T, const IntegratorConfig& cfg) {
  params.validate();
  if (!(T > params.t0)) throw InputError("integrate: T must exceed t0");
  if (x0.size() != obj.dim() || v0.size() != obj.dim())
    throw InputError("integrate: initial data dimension does not match the objective");
  cfg.validate(params.t0, T);

  const std::vector<double> sample_times =
      cfg.sample_times.empty() ? log_spaced_samples(params.t0, T, cfg.samples)
                               : cfg.sample_times;

  const int d = obj.dim();
  FlatSystem f{params, sched, obj};

  Trajectory traj;
  traj.meta.objective_id = obj.id();
  traj.meta.params = params;
  traj.meta.schedule_description = sched.description;
  traj.meta.T = T;
  traj.samples.reserve(sample_times.size());

  double t = params.t0;
  Vector y(2 * d);
  y << x0, v0;

  std::size_t si = 0;
  while (si < sample_times.size() && sample_times[si] <= t) {
    traj.samples.push_back(unpack(t, y, d));
    ++si;
  }

  Vector k1 = f(t, y);
  if (!k1.allFinite()) throw NumericError("integrate: non-finite gradient at the initial state");

  const double span = T - params.t0;
  double h = cfg.initial_step > 0.0
                 ? cfg.initial_step
                 : initial_step_guess(f, t, y, k1, cfg.abs_tol, cfg.rel_tol, span);
  double facold = 1e-4;
  bool last_reject_nonfinite = false;

  Vector k2, k3, k4, k5, k6, k7, y_new, err;
  while (t < T) {
    h = std::min(h, kProportionalCap * t);
    if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
    bool last = false;
    if (t + 1.01 * h >= T) {
      h = T - t;
      last = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * t) {
      if (last_reject_nonfinite)
        throw NumericError("integrate: non-finite values in the vector field");
      std::ostringstream msg;
      msg << "integrate: step size underflow at t = " << t;
      throw IntegrationError(msg.str(), t, y.head(d), y.tail(d));
    }

    k2 = f(t + c2 * h, y + h * (a21 * k1));
    k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    k7 = f(t + h, y_new);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const bool finite = y_new.allFinite() && k7.allFinite() && err.allFinite();
    const double err_norm =
        finite ? error_norm(err, y, y_new, cfg.abs_tol, cfg.rel_tol)
               : std::numeric_limits<double>::infinity();

    if (err_norm > 1.0) {
      const double fac11 = std::isfinite(err_norm) ? std::pow(err_norm, 0.2 - kBeta * 0.75)
                                                   : 1.0 / kFacL;
      h /= std::min(1.0 / kFacL, fac11 / kSafe);
      ++traj.meta.stats.steps_rejected;
      last_reject_nonfinite = !finite;
      continue;
    }
    last_reject_nonfinite = false;

    // Accepted: emit dense-output samples inside (t, t + h].
    if (si < sample_times.size() && sample_times[si] <= t + h) {
      const Vector ydiff = y_new - y;
      const Vector bspl = h * k1 - ydiff;
      const Vector rcont4 = ydiff - h * k7 - bspl;
      const Vector rcont5 =
          h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (si < sample_times.size() && sample_times[si] <= t + h) {
        const double ts = sample_times[si];
        const double theta = (ts - t) / h;
        Vector ys = y + theta * (ydiff + (1.0 - theta) *
                                              (bspl + theta * (rcont4 + (1.0 - theta) * rcont5)));
        traj.samples.push_back(unpack(ts, ys, d));
        ++si;
      }
    }

    const double fac11 = (err_norm == 0.0) ? 0.0 : std::pow(err_norm, 0.2 - kBeta * 0.75);
    double fac = fac11 / std::pow(facold, kBeta);
    fac = std::max(1.0 / kFacR, std::min(1.0 / kFacL, fac / kSafe));
    facold = std::max(err_norm, 1e-4);

    t = last ? T : t + h;
    y.swap(y_new);
    k1.swap(k7);
    h = h / fac;
    ++traj.meta.stats.steps_accepted;
  }

  while (si < sample_times.size()) {  // samples at exactly T
    traj.samples.push_back(unpack(T, y, d));
    ++si;
  }
  traj.meta.stats.gradient_evals = f.evals;
  return traj;
}

Trajectory reference_integrate(const dynamics::DynamicsParams& params,
                               const dynamics::TikhonovSchedule& sched,
                               const problems::Objective& obj, const Vector& x0,
                               const Vector& v0, double T, double h,
                               const std::vector<double>& sample_times_in) {
  params.validate();
  if (!(T > params.t0)) throw InputError("reference_integrate: T must exceed t0");
  if (x0.size() != obj.dim() || v0.size() != obj.dim())
    throw InputError("reference_integrate: initial data dimension does not match the objective");
  if (!(h > 0.0) || h > (T - params.t0) / 1e4)
    throw InputError("reference_integrate: need 0 < h <= (T - t0)/1e4");

  const std::vector<double> sample_times =
      sample_times_in.empty() ? log_spaced_samples(params.t0, T, 200) : sample_times_in;
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (i > 0 && !(sample_times[i] > sample_times[i - 1]))
      throw InputError("reference_integrate: sample times must be strictly increasing");
  }
  if (sample_times.front() < params.t0 || sample_times.back() > T)
    throw InputError("reference_integrate: sample times must lie within [t0, T]");

  const int d = obj.dim();
  FlatSystem f{params, sched, obj};

  Trajectory traj;
  traj.meta.objective_id = obj.id();
  traj.meta.params = params;
  traj.meta.schedule_description = sched.description;
  traj.meta.T = T;
  traj.samples.reserve(sample_times.size());

  double t = params.t0;
  Vector y(2 * d);
  y << x0, v0;

  std::size_t si = 0;
  while (si < sample_times.size() && sample_times[si] <= t) {
    traj.samples.push_back(unpack(t, y, d));
    ++si;
  }

  while (t < T) {
    // March with constant h, shortening steps so sample times and T are hit
    // exactly (order is unaffected).
    double target = std::min(t + h, T);
    bool at_sample = false;
    if (si < sample_times.size() && sample_times[si] <= target) {
      target = sample_times[si];
      at_sample = true;
    }
    const double hs = target - t;
    if (hs > 0.0) {
      Vector k1 = f(t, y);
      Vector k2 = f(t + 0.5 * hs, y + (0.5 * hs) * k1);
      Vector k3 = f(t + 0.5 * hs, y + (0.5 * hs) * k2);
      Vector k4 = f(t + hs, y + hs * k3);
      y += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!y.allFinite()) throw NumericError("reference_integrate: non-finite state");
      ++traj.meta.stats.steps_accepted;
    }
    t = target;
    if (at_sample) {
      traj.samples.push_back(unpack(t, y, d));
      ++si;
    }
  }
  while (si < sample_times.size()) {
    traj.samples.push_back(unpack(T, y, d));
    ++si;
  }
  traj.meta.stats.gradient_evals = f.evals;
  return traj;
}

}  // namespace tikflow::integrator
