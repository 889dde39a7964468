#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tikflow/diagnostics.hpp"
#include "tikflow/discrete.hpp"
#include "tikflow/integrator.hpp"

namespace tikflow::experiments {

inline constexpr int kSchemaVersion = 1;

struct ScheduleSpec {
  std::string type = "power";  // "power" or a named custom
  double a = 1.0;
  double p = 1.0;

  bool is_power() const { return type == "power"; }
  dynamics::TikhonovSchedule make() const;
};

struct RunConfig {
  std::string objective_id;
  dynamics::DynamicsParams params;
  ScheduleSpec schedule;
  std::optional<Vector> x0;  // default: x* + (5,3,5,3,...) truncated to dim
  std::optional<Vector> v0;  // default: 0
  double T = 1e4;
  integrator::IntegratorConfig icfg;
  std::optional<double> b_weak;    // default alpha/2
  std::optional<double> b_strong;  // default alpha/4
  double tail_fraction = 0.3;
  std::filesystem::path out_dir;

  Vector resolved_x0() const;
  Vector resolved_v0() const;
  diagnostics::DiagnosticsConfig diag_config() const;
};

/// Default starting offset (5,3,5,3,...) truncated to dim.
Vector default_offset(int dim);

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text);

/// Collects every violated invariant as "field.path: message"; empty when valid.
std::vector<std::string> validate(const RunConfig& cfg);

struct FitOutcome {
  bool ok = false;  // false -> insufficient data
  diagnostics::FitResult fit;
};

struct CheckResult {
  std::string id;
  std::string status;  // "pass" / "fail" / "skipped"
  double measured = 0.0;
  std::string detail;
};

struct RunSummary {
  dynamics::Regime regime;
  dynamics::ConditionReport conditions;
  std::map<std::string, FitOutcome> fitted_exponents;
  double final_dist_to_xstar = 0.0;
  double final_dist_to_tikhonov = 0.0;
  diagnostics::IntegralAccumulators integrals;
  integrator::IntegratorStats stats;
  std::vector<CheckResult> checks;          // run-local, regime-driven
  std::vector<CheckResult> acceptance;      // every criterion id, mostly "skipped"
  bool degenerate = false;                  // all fit series empty (e.g. started at x*)
  std::string summary_json;                 // serialized form as written to disk
};

/// Full pipeline: validate, integrate, annotate, accumulate, fit, check.
/// Writes trajectory.csv and summary.json under cfg.out_dir when set.
RunSummary run(const RunConfig& cfg, integrator::Trajectory* traj_out = nullptr);

struct SweepCell {
  double q = 0.0;
  double p = 0.0;
  std::string regime;
  double final_dist_to_xstar = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // ordered by (q, p)
  std::string table;             // printable regime map
};

/// Grid sweep over p x q on a bounded worker pool; each cell owns its output
/// directory, failures are isolated per cell.
SweepResult sweep(const RunConfig& base, const std::vector<double>& ps,
                  const std::vector<double>& qs, int workers = 0);

struct DiscreteConfig {
  std::string objective_id;
  discrete::DiscreteParams params;
  bool auto_stepsize = false;  // s = 1/(2 L_hat), quadratics only
  std::optional<Vector> x0;
  std::optional<Vector> x1;
  long iterations = 100000;
  std::filesystem::path out_dir;
};

DiscreteConfig load_discrete_config(const std::filesystem::path& path);
DiscreteConfig parse_discrete_config(const std::string& json_text);

struct DiscreteSummary {
  double final_gap = 0.0;
  double final_dist_to_xstar = 0.0;
  long iterations = 0;
  bool diverged = false;
  std::string note;  // flags the exploratory status
  std::string summary_json;
};

/// Runs the inertial iteration, writes history.csv and summary.json.
DiscreteSummary run_discrete(const DiscreteConfig& cfg);

/// Output directory resolution: explicit path > TIKFLOW_OUT > "./out".
std::filesystem::path resolve_out_dir(const std::filesystem::path& explicit_dir);

void write_trajectory_csv(const std::filesystem::path& file, const integrator::Trajectory& traj);

}  // namespace tikflow::experiments
