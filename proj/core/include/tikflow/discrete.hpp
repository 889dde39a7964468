#pragma once

#include <vector>

#include "tikflow/common.hpp"
#include "tikflow/problems.hpp"

namespace tikflow::discrete {

/// Parameters of the inertial gradient iteration
///   x_{n+1} = x_n + (1 - alpha/n^q)(x_n - x_{n-1})
///             - s grad g(x_n + (gamma + beta/n^q)(x_n - x_{n-1})) - eps_n x_n
/// with eps_n = a n^{-p}. Admissibility of (alpha, q, gamma, beta) mirrors the
/// continuous system; 1 - alpha/n^q may be negative for small n and is used
/// as-is.
struct DiscreteParams {
  double alpha = 2.0;
  double q = 0.5;
  double gamma = 1.0;
  double beta = 0.0;
  double s = 0.1;   // stepsize
  double a = 0.1;
  double p = 0.9;
  long n0 = 1;

  double eps_at(long n) const { return a * std::pow(static_cast<double>(n), -p); }
  void validate() const;
};

struct IterateState {
  long n = 1;
  Vector x_prev;
  Vector x_curr;
};

/// One iteration; a single gradient evaluation.
Vector step(const DiscreteParams& params, const problems::Objective& obj,
            const IterateState& s);

struct HistoryPoint {
  long n = 0;
  double gap = 0.0;            // g(x_n) - g*
  double dist_to_xstar = 0.0;  // ||x_n - x*||
};

struct RunResult {
  std::vector<HistoryPoint> history;  // subsampled on a log grid (plus first/last)
  Vector x_final;
  long iterations = 0;
};

/// Iterate N times from (x0, x1). Aborts with DivergenceError once
/// ||x_n|| > 1e12.
RunResult run(const DiscreteParams& params, const problems::Objective& obj, const Vector& x0,
              const Vector& x1, long N);

/// Largest-Hessian-eigenvalue estimate by power iteration at `at` (default
/// x*); drives the default stepsize s = 1/(2 L).
double estimate_lipschitz(const problems::Objective& obj, const Vector* at = nullptr,
                          int iterations = 200);

/// Continuous-side coefficients of (DS) before the discretization renaming.
struct RawDynamics {
  double alpha = 2.0;
  double gamma = 1.0;
  double beta = 0.0;
};

/// The renaming that turns one explicit-Euler step of (DS) with stepsize h
/// into the inertial iteration above:
///   s = h^2, alpha -> h^{1-q} alpha, gamma -> gamma/h, beta -> beta/h^{q+1},
///   eps_n -> h^2 eps_n.
struct SubstitutedParams {
  double s = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double eps_factor = 0.0;  // eps_n(substituted) = eps_factor * eps_n(raw)
};

SubstitutedParams euler_substitution(double h, double q, const RawDynamics& raw);

struct EquivalenceResult {
  bool ok = false;
  double max_residual = 0.0;
};

/// Verify that one substituted iteration step equals the finite-difference
/// scheme
///   (x_{n+1} - 2 x_n + x_{n-1})/h^2 + alpha/(h^{q+1} n^q)(x_n - x_{n-1})
///   + grad g(x_n + (gamma/h + beta/(h^{q+1} n^q))(x_n - x_{n-1})) + eps_n x_n = 0
/// solved for x_{n+1}, to `rel_tol` relative residual. Both sides are computed
/// independently. A SubstitutedParams override lets tests break the identity
/// on purpose.
EquivalenceResult euler_equivalence_check(double h, double q, const RawDynamics& raw,
                                          double raw_eps_n, long n, const Vector& x_prev,
                                          const Vector& x_curr, const problems::Objective& obj,
                                          double rel_tol = 1e-12,
                                          const SubstitutedParams* substitution_override = nullptr);

}  // namespace tikflow::discrete
