#include <doctest.h>

#include <cmath>
#include <cstring>

#include "test_support.hpp"
#include "tikflow/integrator.hpp"

using namespace tikflow;
using namespace tikflow::integrator;
using dynamics::DynamicsParams;
using dynamics::PowerSchedule;

namespace {

const DynamicsParams kDefault{2.0, 0.5, 1.0, 0.0, 1.0};

IntegratorConfig tight_cfg() {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-300;
  cfg.samples = 100;
  return cfg;
}

double max_state_deviation(const Trajectory& a, const Trajectory& b) {
  REQUIRE(a.samples.size() == b.samples.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    worst = std::max(worst, (a.samples[k].x - b.samples[k].x).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.samples[k].v - b.samples[k].v).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Nonsmooth vector field with a huge jump; keeps the error estimator above 1
// so the step controller shrinks h into underflow.
class KinkObjective : public problems::Objective {
 public:
  KinkObjective() : Objective("kink", 1) {
    problems::ArgminDescription argmin;
    argmin.base = Vector::Zero(1);
    set_minimum(0.0, Vector::Zero(1), argmin);
  }
  Matrix hessian(const Vector&) const override { return Matrix::Zero(1, 1); }

 protected:
  double value_impl(const Vector& x) const override { return 1e30 * std::abs(x[0]); }
  Vector gradient_impl(const Vector& x) const override {
    Vector g(1);
    g << (x[0] >= 0.0 ? 1e30 : -1e30);
    return g;
  }
};

class NaNObjective : public problems::Objective {
 public:
  NaNObjective() : Objective("nan", 1) {
    problems::ArgminDescription argmin;
    argmin.base = Vector::Zero(1);
    set_minimum(0.0, Vector::Zero(1), argmin);
  }
  Matrix hessian(const Vector&) const override { return Matrix::Zero(1, 1); }

 protected:
  double value_impl(const Vector&) const override { return 0.0; }
  Vector gradient_impl(const Vector&) const override {
    Vector g(1);
    g << std::numeric_limits<double>::quiet_NaN();
    return g;
  }
};

}  // namespace

TEST_CASE("log-spaced sample grid") {
  const auto ts = log_spaced_samples(1.0, 1e4, 200);
  CHECK(ts.size() == 200);
  CHECK(ts.front() == 1.0);
  CHECK(ts.back() == 1e4);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);
  CHECK_THROWS_AS(log_spaced_samples(0.0, 1.0, 10), InputError);
  CHECK_THROWS_AS(log_spaced_samples(1.0, 2.0, 1), InputError);
}

TEST_CASE("config validation") {
  IntegratorConfig cfg;
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(1.0, 10.0), InputError);
  cfg = {};
  cfg.sample_times = {2.0, 1.5};
  CHECK_THROWS_AS(cfg.validate(1.0, 10.0), InputError);
  cfg.sample_times = {0.5, 1.5};
  CHECK_THROWS_AS(cfg.validate(1.0, 10.0), InputError);
  cfg.sample_times = {1.0, 5.0, 10.0};
  CHECK_NOTHROW(cfg.validate(1.0, 10.0));
}

TEST_CASE("identically zero trajectory stays zero") {
  auto quad = test::identity_quad(2);
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  const auto traj = integrate(kDefault, sched, *quad, Vector::Zero(2), Vector::Zero(2), 1e4,
                              tight_cfg());
  CHECK(traj.samples.size() == 100);
  for (const auto& s : traj.samples) {
    CHECK(s.x.norm() == 0.0);
    CHECK(s.v.norm() == 0.0);
  }
  const auto ref = reference_integrate(kDefault, sched, *quad, Vector::Zero(2), Vector::Zero(2),
                                       10.0, 1e-4);
  for (const auto& s : ref.samples) CHECK(s.x.norm() == 0.0);
}

TEST_CASE("adaptive endpoint agrees with the fixed-step oracle (1-D hand case)") {
  auto quad = test::quad_1d();
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  const auto ts = log_spaced_samples(1.0, 100.0, 50);
  IntegratorConfig cfg = tight_cfg();
  cfg.sample_times = ts;
  const auto adaptive = integrate(kDefault, sched, *quad, x0, v0, 100.0, cfg);
  const auto reference = reference_integrate(kDefault, sched, *quad, x0, v0, 100.0, 1e-4, ts);
  CHECK((adaptive.samples.back().x - reference.samples.back().x).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("reference integrator converges at order 4") {
  auto quad = test::quad_1d();
  auto sched = PowerSchedule{1.0, 0.9}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  const std::vector<double> only_end = {101.0};
  const auto end_state = [&](double h) {
    return reference_integrate(kDefault, sched, *quad, x0, v0, 101.0, h, only_end)
        .samples.back();
  };
  const auto y1 = end_state(0.01);
  const auto y2 = end_state(0.005);
  const auto y4 = end_state(0.0025);
  const double e12 = std::abs(y1.x[0] - y2.x[0]);
  const double e24 = std::abs(y2.x[0] - y4.x[0]);
  CHECK(e12 / e24 == doctest::Approx(16.0).epsilon(0.35));

  CHECK_THROWS_AS(end_state(0.5), InputError);  // h > (T - t0)/1e4
}

TEST_CASE("oracle agreement across the corpus and regime defaults") {
  for (const auto& id : problems::corpus_ids()) {
    const auto& obj = problems::corpus(id);
    const Vector x0 = obj.minimal_norm_minimizer() +
                      Vector::NullaryExpr(obj.dim(), [](Eigen::Index i) {
                        return i % 2 == 0 ? 5.0 : 3.0;
                      });
    const Vector v0 = Vector::Zero(obj.dim());
    for (double p : {1.8, 0.9, 1.5}) {
      auto sched = PowerSchedule{1.0, p}.as_schedule();
      const auto ts = log_spaced_samples(1.0, 100.0, 60);
      IntegratorConfig cfg = tight_cfg();
      cfg.sample_times = ts;
      const auto adaptive = integrate(kDefault, sched, obj, x0, v0, 100.0, cfg);
      const auto reference = reference_integrate(kDefault, sched, obj, x0, v0, 100.0, 1e-4, ts);
      CAPTURE(id);
      CAPTURE(p);
      CHECK(max_state_deviation(adaptive, reference) <= 1e-5);
    }
  }
}

TEST_CASE("integration is bitwise deterministic") {
  const auto& obj = problems::corpus("quad_pd_5");
  auto sched = PowerSchedule{1.0, 0.9}.as_schedule();
  const Vector x0 = Vector::LinSpaced(5, 1.0, 5.0);
  const Vector v0 = Vector::Zero(5);
  const auto t1 = integrate(kDefault, sched, obj, x0, v0, 1e3, tight_cfg());
  const auto t2 = integrate(kDefault, sched, obj, x0, v0, 1e3, tight_cfg());
  REQUIRE(t1.samples.size() == t2.samples.size());
  for (std::size_t k = 0; k < t1.samples.size(); ++k) {
    CHECK(std::memcmp(t1.samples[k].x.data(), t2.samples[k].x.data(), sizeof(double) * 5) == 0);
    CHECK(std::memcmp(t1.samples[k].v.data(), t2.samples[k].v.data(), sizeof(double) * 5) == 0);
  }
  CHECK(t1.meta.stats.steps_accepted == t2.meta.stats.steps_accepted);
  CHECK(t1.meta.stats.gradient_evals == t2.meta.stats.gradient_evals);
}

TEST_CASE("gradient evaluation counting matches the stats") {
  test::CountingObjective counted(problems::corpus("quad_line_2"));
  auto sched = PowerSchedule{1.0, 0.9}.as_schedule();
  Vector x0(2), v0(2);
  x0 << 5.0, 3.0;
  v0 << 0.0, 0.0;
  const auto traj = integrate(kDefault, sched, counted, x0, v0, 50.0, tight_cfg());
  CHECK(traj.meta.stats.gradient_evals == counted.gradient_calls());
  CHECK(traj.meta.stats.steps_accepted > 0);
}

TEST_CASE("step-size underflow raises an integration error with the last good time") {
  KinkObjective kink;
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  try {
    integrate(kDefault, sched, kink, x0, v0, 100.0, tight_cfg());
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.t_last >= 1.0);
    CHECK(e.t_last < 100.0);
    CHECK(e.x_last.size() == 1);  // carries the last good state
    CHECK(e.v_last.size() == 1);
    CHECK(e.x_last.allFinite());
  }
}

TEST_CASE("non-finite gradients raise a numeric error") {
  NaNObjective nan_obj;
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  CHECK_THROWS_AS(integrate(kDefault, sched, nan_obj, x0, v0, 100.0, tight_cfg()), NumericError);
}

TEST_CASE("max_step caps the accepted step size") {
  auto quad = test::quad_1d();
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  IntegratorConfig free_cfg = tight_cfg();
  IntegratorConfig capped = tight_cfg();
  capped.max_step = 0.05;
  const auto loose = integrate(kDefault, sched, *quad, x0, v0, 100.0, free_cfg);
  const auto tight = integrate(kDefault, sched, *quad, x0, v0, 100.0, capped);
  CHECK(tight.meta.stats.steps_accepted >= static_cast<long>(99.0 / 0.05));
  CHECK(tight.meta.stats.steps_accepted > loose.meta.stats.steps_accepted);
}

TEST_CASE("input validation of integrate") {
  auto quad = test::quad_1d();
  auto sched = PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(1), v0(1);
  x0 << 1.0;
  v0 << 0.0;
  CHECK_THROWS_AS(integrate(kDefault, sched, *quad, x0, v0, 0.5, tight_cfg()), InputError);
  CHECK_THROWS_AS(integrate(kDefault, sched, *quad, Vector::Zero(2), v0, 10.0, tight_cfg()),
                  InputError);
}
