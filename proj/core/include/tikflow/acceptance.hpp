#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tikflow/experiments.hpp"

namespace tikflow::acceptance {

struct Criterion {
  std::string id;    // "A1" .. "A11"
  std::string slug;  // e.g. "weak_rates"
  std::string title;
};

const std::vector<Criterion>& criteria();

struct Options {
  std::string only;  // empty -> all; matches id or slug
  std::filesystem::path out_dir;
  int workers = 0;
  std::function<void(const experiments::CheckResult&)> on_result;  // per-criterion callback
};

struct SuiteResult {
  std::vector<experiments::CheckResult> results;  // one per criterion, in order
  int failures = 0;
  std::string summary_json;
};

/// Run the acceptance suite (writes acceptance_summary.json under out_dir when
/// set). Criteria filtered out by `only` are reported as "skipped".
SuiteResult run_suite(const Options& opts = {});

/// Evaluate the criteria that can be judged from a single finished run; used
/// to fill RunSummary.acceptance. Criteria whose scenario does not match the
/// config come back "skipped".
std::vector<experiments::CheckResult> evaluate_for_run(
    const experiments::RunConfig& cfg, const integrator::Trajectory& traj,
    const experiments::RunSummary& summary);

}  // namespace tikflow::acceptance
