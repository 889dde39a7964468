#include <benchmark/benchmark.h>

#include "tikflow/diagnostics.hpp"
#include "tikflow/discrete.hpp"
#include "tikflow/integrator.hpp"

using namespace tikflow;

namespace {

const dynamics::DynamicsParams kParams{2.0, 0.5, 1.0, 0.0, 1.0};

void BM_RhsQuadPd5(benchmark::State& state) {
  const auto& obj = problems::corpus("quad_pd_5");
  const auto sched = dynamics::PowerSchedule{1.0, 1.8}.as_schedule();
  dynamics::State s{3.0, Vector::LinSpaced(5, -1.0, 2.0), Vector::LinSpaced(5, 0.5, -0.5)};
  for (auto _ : state) {
    auto d = dynamics::rhs(kParams, sched, obj, s);
    benchmark::DoNotOptimize(d.dv.data());
  }
}
BENCHMARK(BM_RhsQuadPd5);

void BM_RhsLse5(benchmark::State& state) {
  const auto& obj = problems::corpus("lse_5");
  const auto sched = dynamics::PowerSchedule{1.0, 0.9}.as_schedule();
  dynamics::State s{3.0, Vector::LinSpaced(5, -1.0, 2.0), Vector::LinSpaced(5, 0.5, -0.5)};
  for (auto _ : state) {
    auto d = dynamics::rhs(kParams, sched, obj, s);
    benchmark::DoNotOptimize(d.dv.data());
  }
}
BENCHMARK(BM_RhsLse5);

void BM_IntegrateWeakShort(benchmark::State& state) {
  const auto& obj = problems::corpus("quad_pd_5");
  const auto sched = dynamics::PowerSchedule{1.0, 1.8}.as_schedule();
  Vector x0(5), v0(5);
  x0 << 5.0, 3.0, 5.0, 3.0, 5.0;
  v0.setZero();
  integrator::IntegratorConfig cfg;
  cfg.abs_tol = 1e-300;
  cfg.samples = 50;
  for (auto _ : state) {
    auto traj = integrator::integrate(kParams, sched, obj, x0, v0, 100.0, cfg);
    benchmark::DoNotOptimize(traj.samples.back().x.data());
  }
}
BENCHMARK(BM_IntegrateWeakShort)->Unit(benchmark::kMillisecond);

void BM_TikhonovPointLse(benchmark::State& state) {
  const auto& obj = problems::corpus("lse_5");
  for (auto _ : state) {
    auto x = problems::tikhonov_point(obj, 1e-3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_TikhonovPointLse);

void BM_DiscreteStep(benchmark::State& state) {
  const auto& obj = problems::corpus("quad_pd_5");
  discrete::DiscreteParams params{2.0, 0.5, 1.0, 0.0, 0.05, 0.1, 0.9, 1};
  discrete::IterateState s{10, Vector::LinSpaced(5, 0.0, 1.0), Vector::LinSpaced(5, 0.1, 1.1)};
  for (auto _ : state) {
    auto x = discrete::step(params, obj, s);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_DiscreteStep);

void BM_SampleDiagnostics(benchmark::State& state) {
  const auto& obj = problems::corpus("quad_line_2");
  const auto sched = dynamics::PowerSchedule{1.0, 0.9}.as_schedule();
  diagnostics::DiagnosticsConfig cfg;
  Vector x(2), v(2);
  x << 5.0, 3.0;
  v << -0.1, 0.2;
  for (auto _ : state) {
    auto d = diagnostics::sample_diagnostics(kParams, sched, obj, cfg, {7.0, x, v});
    benchmark::DoNotOptimize(&d);
  }
}
BENCHMARK(BM_SampleDiagnostics);

}  // namespace

BENCHMARK_MAIN();
