#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tikflow/acceptance.hpp"
#include "tikflow/experiments.hpp"

namespace {

using namespace tikflow;

int cmd_run(const std::string& config_path, const std::string& out_dir, double tail_fraction) {
  experiments::RunConfig cfg = experiments::load_run_config(config_path);
  if (tail_fraction > 0.0) cfg.tail_fraction = tail_fraction;
  cfg.out_dir = experiments::resolve_out_dir(out_dir.empty() ? cfg.out_dir : std::filesystem::path(out_dir));
  const auto summary = experiments::run(cfg);

  std::cout << "objective " << cfg.objective_id << ", regime "
            << dynamics::to_string(summary.regime.kind) << " (" << summary.regime.rationale
            << ")\n";
  std::cout << "final dist_to_xstar " << summary.final_dist_to_xstar << ", dist_to_tikhonov "
            << summary.final_dist_to_tikhonov << "\n";
  for (const auto& [name, fit] : summary.fitted_exponents) {
    if (fit.ok)
      std::printf("fit %-18s slope %9.4f  r2 %.4f  (%d pts)\n", name.c_str(), fit.fit.slope,
                  fit.fit.r2, fit.fit.points);
  }
  for (const auto& c : summary.checks)
    std::cout << "check " << c.id << ": " << c.status << " (measured " << c.measured << ")\n";
  std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              std::vector<double> ps, std::vector<double> qs, int workers) {
  experiments::RunConfig base;
  if (!config_path.empty()) {
    base = experiments::load_run_config(config_path);
  } else {
    base.objective_id = "quad_line_2";
    Vector x0(2);
    x0 << 5.0, 3.0;
    base.x0 = x0;
    base.icfg.abs_tol = 1e-300;
  }
  base.out_dir = experiments::resolve_out_dir(out_dir.empty() ? base.out_dir : std::filesystem::path(out_dir));
  if (ps.empty()) ps = {0.6, 0.9, 1.2, 1.5, 1.8, 2.0};
  if (qs.empty()) qs = {0.3, 0.5, 0.7};

  const auto res = experiments::sweep(base, ps, qs, workers);
  std::cout << res.table;
  int failed = 0;
  for (const auto& c : res.cells)
    if (c.failed) {
      ++failed;
      std::cout << "cell q=" << c.q << " p=" << c.p << " failed: " << c.error << "\n";
    }
  std::cout << "artifacts in " << base.out_dir.string() << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_discrete(const std::string& config_path, const std::string& out_dir) {
  experiments::DiscreteConfig cfg = experiments::load_discrete_config(config_path);
  cfg.out_dir = experiments::resolve_out_dir(out_dir.empty() ? cfg.out_dir : std::filesystem::path(out_dir));
  const auto summary = experiments::run_discrete(cfg);
  std::cout << "iterations " << summary.iterations << ", final gap " << summary.final_gap
            << ", final dist_to_xstar " << summary.final_dist_to_xstar << "\n";
  std::cout << "note: " << summary.note << "\n";
  std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
  return summary.diverged ? 1 : 0;
}

int cmd_accept(const std::string& only, const std::string& out_dir, int workers) {
  if (!only.empty()) {
    bool known = false;
    for (const auto& c : acceptance::criteria()) known = known || only == c.id || only == c.slug;
    if (!known) {
      std::cerr << "unknown criterion '" << only << "'; available:\n";
      for (const auto& c : acceptance::criteria())
        std::cerr << "  " << c.id << "  " << c.slug << "\n";
      return 2;
    }
  }
  acceptance::Options opts;
  opts.only = only;
  opts.workers = workers;
  opts.out_dir = experiments::resolve_out_dir(out_dir);
  opts.on_result = [](const experiments::CheckResult& r) {
    std::string slug;
    for (const auto& c : acceptance::criteria())
      if (c.id == r.id) slug = c.slug;
    std::printf("%-4s %-22s %-7s %s\n", r.id.c_str(), slug.c_str(), r.status.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
  };
  const auto suite = acceptance::run_suite(opts);
  std::cout << (suite.failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
            << suite.failures << " failing)\n";
  return suite.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tikflow: damped inertial dynamics with vanishing Tikhonov regularization"};
  app.require_subcommand(1);

  std::string config_path, out_dir, only;
  double tail_fraction = 0.0;
  int workers = 0;
  std::vector<double> ps, qs;

  auto* run = app.add_subcommand("run", "integrate one configuration and emit CSV/JSON");
  run->add_option("--config", config_path, "run config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides TIKFLOW_OUT)");
  run->add_option("--tail-fraction", tail_fraction, "tail window fraction for rate fits");

  auto* sweep = app.add_subcommand("sweep", "regime sweep over a (p, q) grid");
  sweep->add_option("--config", config_path, "base run config JSON");
  sweep->add_option("--out", out_dir, "output directory (overrides TIKFLOW_OUT)");
  sweep->add_option("--p", ps, "p grid (default 0.6 0.9 1.2 1.5 1.8 2.0)");
  sweep->add_option("--q", qs, "q grid (default 0.3 0.5 0.7)");
  sweep->add_option("--workers", workers, "worker pool size (default: hardware)");

  auto* discrete = app.add_subcommand("discrete", "run the inertial gradient iteration");
  discrete->add_option("--config", config_path, "discrete config JSON")->required();
  discrete->add_option("--out", out_dir, "output directory (overrides TIKFLOW_OUT)");

  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  accept->add_option("--only", only, "run a single criterion (id or slug)");
  accept->add_option("--out", out_dir, "output directory (overrides TIKFLOW_OUT)");
  accept->add_option("--workers", workers, "worker pool size (default: hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, tail_fraction);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir, ps, qs, workers);
    if (discrete->parsed()) return cmd_discrete(config_path, out_dir);
    if (accept->parsed()) return cmd_accept(only, out_dir, workers);
  } catch (const tikflow::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
