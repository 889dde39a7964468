#include "tikflow/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tikflow::discrete {

namespace {

constexpr double kDivergenceThreshold = 1e12;

Vector step_with_eps(double alpha, double q, double gamma, double beta, double s, double eps_n,
                     const problems::Objective& obj, long n, const Vector& x_prev,
                     const Vector& x_curr) {
  const double nq = std::pow(static_cast<double>(n), -q);
  const Vector dx = x_curr - x_prev;
  const Vector grad = obj.gradient(x_curr + (gamma + beta * nq) * dx);
  Vector next = x_curr + (1.0 - alpha * nq) * dx - s * grad - eps_n * x_curr;
  if (!next.allFinite()) {
    std::ostringstream msg;
    msg << "discrete step: non-finite iterate at n = " << n;
    throw NumericError(msg.str());
  }
  return next;
}

}  // namespace

void DiscreteParams::validate() const {
  if (!(alpha > 0.0)) throw InputError("discrete.alpha: must be positive");
  if (!(q > 0.0 && q < 1.0)) throw InputError("discrete.q: must lie in (0, 1)");
  if (!(gamma >= 0.0)) throw InputError("discrete.gamma: must be nonnegative");
  if (gamma == 0.0 && !(beta > 0.0))
    throw InputError("discrete.beta: must be positive when gamma = 0");
  if (!(s > 0.0)) throw InputError("discrete.s: must be positive");
  if (!(a > 0.0)) throw InputError("discrete.a: must be positive");
  if (!(p > 0.0)) throw InputError("discrete.p: must be positive");
  if (n0 < 1) throw InputError("discrete.n0: must be at least 1");
}

Vector step(const DiscreteParams& params, const problems::Objective& obj, const IterateState& s) {
  if (s.x_prev.size() != obj.dim() || s.x_curr.size() != obj.dim())
    throw InputError("discrete step: state dimension does not match the objective");
  if (s.n < params.n0) throw InputError("discrete step: n < n0");
  return step_with_eps(params.alpha, params.q, params.gamma, params.beta, params.s,
                       params.eps_at(s.n), obj, s.n, s.x_prev, s.x_curr);
}

RunResult run(const DiscreteParams& params, const problems::Objective& obj, const Vector& x0,
              const Vector& x1, long N) {
  params.validate();
  if (N < 1) throw InputError("discrete run: N must be at least 1");
  if (x0.size() != obj.dim() || x1.size() != obj.dim())
    throw InputError("discrete run: initial iterates do not match the objective");

  // Record on a log grid of iteration indices, always including the endpoints.
  std::set<long> record;
  const long n_last = params.n0 + N;
  const double l0 = std::log(static_cast<double>(params.n0));
  const double l1 = std::log(static_cast<double>(n_last));
  for (int i = 0; i < 200; ++i)
    record.insert(static_cast<long>(std::llround(std::exp(l0 + (l1 - l0) * i / 199.0))));
  record.insert(params.n0);
  record.insert(n_last);

  const Vector& xstar = obj.minimal_norm_minimizer();
  RunResult out;
  const auto record_point = [&](long n, const Vector& x) {
    out.history.push_back({n, obj.value(x) - obj.min_value(), (x - xstar).norm()});
  };

  Vector x_prev = x0, x_curr = x1;
  if (record.count(params.n0)) record_point(params.n0, x_curr);
  for (long k = 0; k < N; ++k) {
    const long n = params.n0 + k;
    Vector next = step_with_eps(params.alpha, params.q, params.gamma, params.beta, params.s,
                                params.eps_at(n), obj, n, x_prev, x_curr);
    x_prev = std::move(x_curr);
    x_curr = std::move(next);
    const double norm = x_curr.norm();
    if (norm > kDivergenceThreshold) {
      std::ostringstream msg;
      msg << "discrete run diverged: ||x_n|| = " << norm << " at n = " << n + 1;
      throw DivergenceError(msg.str(), n + 1, norm);
    }
    if (record.count(n + 1)) record_point(n + 1, x_curr);
  }
  out.x_final = std::move(x_curr);
  out.iterations = N;
  return out;
}

double estimate_lipschitz(const problems::Objective& obj, const Vector* at, int iterations) {
  const Vector x = at ? *at : obj.minimal_norm_minimizer();
  const Matrix h = obj.hessian(x);
  Vector v = Vector::Ones(obj.dim()).normalized();
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    Vector w = h * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  return std::abs(lambda);
}

SubstitutedParams euler_substitution(double h, double q, const RawDynamics& raw) {
  if (!(h > 0.0)) throw InputError("euler_substitution: h must be positive");
  SubstitutedParams sub;
  sub.s = h * h;
  sub.alpha = std::pow(h, 1.0 - q) * raw.alpha;
  sub.gamma = raw.gamma / h;
  sub.beta = raw.beta / std::pow(h, q + 1.0);
  sub.eps_factor = h * h;
  return sub;
}

EquivalenceResult euler_equivalence_check(double h, double q, const RawDynamics& raw,
                                          double raw_eps_n, long n, const Vector& x_prev,
                                          const Vector& x_curr, const problems::Objective& obj,
                                          double rel_tol,
                                          const SubstitutedParams* substitution_override) {
  if (!(h > 0.0)) throw InputError("euler_equivalence_check: h must be positive");
  const SubstitutedParams sub =
      substitution_override ? *substitution_override : euler_substitution(h, q, raw);

  const Vector lhs = step_with_eps(sub.alpha, q, sub.gamma, sub.beta, sub.s,
                                   sub.eps_factor * raw_eps_n, obj, n, x_prev, x_curr);

  // Independent route: the finite-difference scheme
  //   (x_{n+1} - 2 x_n + x_{n-1})/h^2 + alpha/(h^{q+1} n^q) (x_n - x_{n-1})
  //   + grad g(x_n + (gamma/h + beta/(h^{q+1} n^q)) (x_n - x_{n-1})) + eps_n x_n = 0
  // solved for x_{n+1}.
  const double nq = std::pow(static_cast<double>(n), q);
  const double hq1 = std::pow(h, q + 1.0);
  const Vector dx = x_curr - x_prev;
  const Vector extrapolated = x_curr + (raw.gamma / h + raw.beta / (hq1 * nq)) * dx;
  const Vector rhs = 2.0 * x_curr - x_prev -
                     h * h *
                         (raw.alpha / (hq1 * nq) * dx + obj.gradient(extrapolated) +
                          raw_eps_n * x_curr);

  EquivalenceResult res;
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  res.max_residual = (lhs - rhs).cwiseAbs().maxCoeff() / scale;
  res.ok = res.max_residual <= rel_tol;
  return res;
}

}  // namespace tikflow::discrete
