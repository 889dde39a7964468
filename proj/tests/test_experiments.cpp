#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "tikflow/acceptance.hpp"
#include "tikflow/experiments.hpp"

using namespace tikflow;
using namespace tikflow::experiments;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("tikflow_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.objective_id = "quad_line_2";
  cfg.params = {2.0, 0.5, 1.0, 0.0, 1.0};
  cfg.schedule = {"power", 1.0, 0.9};
  Vector x0(2);
  x0 << 5.0, 3.0;
  cfg.x0 = x0;
  cfg.T = 100.0;
  cfg.icfg.abs_tol = 1e-300;
  cfg.icfg.samples = 60;
  return cfg;
}

}  // namespace

TEST_CASE("run config parses JSON and resolves defaults") {
  const std::string text = R"({
    "schema_version": 1,
    "objective": "quad_line_2",
    "dynamics": {"alpha": 2.0, "q": 0.5, "gamma": 1.0, "beta": 0.0, "t0": 1.0},
    "schedule": {"a": 1.0, "p": 0.9},
    "T": 1e4,
    "integrator": {"rel_tol": 1e-9, "abs_tol": 1e-300, "samples": 120},
    "tail_fraction": 0.25
  })";
  const RunConfig cfg = parse_run_config(text);
  CHECK(cfg.objective_id == "quad_line_2");
  CHECK(cfg.params.alpha == 2.0);
  CHECK(cfg.schedule.p == 0.9);
  CHECK(cfg.schedule.type == "power");
  CHECK(cfg.icfg.samples == 120);
  CHECK(cfg.tail_fraction == 0.25);
  CHECK(validate(cfg).empty());

  // defaults: x0 = x* + (5,3) pattern, v0 = 0
  const Vector x0 = cfg.resolved_x0();
  CHECK(x0[0] == doctest::Approx(5.0));
  CHECK(x0[1] == doctest::Approx(4.0));
  CHECK(cfg.resolved_v0().norm() == 0.0);
}

TEST_CASE("config validation reports field paths") {
  RunConfig cfg = small_config();
  cfg.objective_id = "nope";
  cfg.params.alpha = -1.0;
  cfg.tail_fraction = 2.0;
  const auto errors = validate(cfg);
  REQUIRE(errors.size() >= 3);
  bool saw_objective = false, saw_alpha = false, saw_tail = false;
  for (const auto& e : errors) {
    saw_objective = saw_objective || e.find("objective") != std::string::npos;
    saw_alpha = saw_alpha || e.find("dynamics.alpha") != std::string::npos;
    saw_tail = saw_tail || e.find("tail_fraction") != std::string::npos;
  }
  CHECK(saw_objective);
  CHECK(saw_alpha);
  CHECK(saw_tail);

  CHECK_THROWS_AS(run(cfg), InputError);
  CHECK_THROWS_AS(parse_run_config("{not json"), InputError);
  CHECK_THROWS_AS(parse_run_config("{}"), InputError);  // objective required
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), InputError);
}

TEST_CASE("run writes trajectory.csv and summary.json with a stable schema") {
  const auto dir = temp_dir("run");
  RunConfig cfg = small_config();
  cfg.out_dir = dir;
  const RunSummary summary = run(cfg);

  CHECK(std::filesystem::exists(dir / "trajectory.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));

  const json j = json::parse(slurp(dir / "summary.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["regime"]["kind"] == "Strong");
  CHECK(j["conditions"].contains("c1"));
  CHECK(j["fitted_exponents"].contains("gap_shifted"));
  CHECK(j["integrals"]["I_speed"].contains("total"));
  // every acceptance criterion id appears with a known status
  for (const auto& c : acceptance::criteria()) {
    REQUIRE(j["acceptance"].contains(c.id));
    const std::string status = j["acceptance"][c.id]["status"];
    CHECK((status == "pass" || status == "fail" || status == "skipped"));
  }
  CHECK(summary.regime.kind == dynamics::RegimeKind::Strong);

  // CSV header carries the diagnostics columns and 17-digit values round-trip
  std::istringstream csv(slurp(dir / "trajectory.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header.find("t,x0,x1,v0,v1,gap_shifted") == 0);
  std::string first_row;
  std::getline(csv, first_row);
  CHECK(first_row.substr(0, 2) == "1,");  // t0 exactly
  CHECK(first_row.find(",5,") != std::string::npos);  // x0[0] printed exactly
}

TEST_CASE("reruns are bitwise identical") {
  const auto dir1 = temp_dir("rerun1");
  const auto dir2 = temp_dir("rerun2");
  RunConfig cfg = small_config();
  cfg.out_dir = dir1;
  run(cfg);
  cfg.out_dir = dir2;
  run(cfg);
  CHECK(slurp(dir1 / "trajectory.csv") == slurp(dir2 / "trajectory.csv"));
  CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));
}

TEST_CASE("degenerate run: started at the minimizer, fits are flagged") {
  RunConfig cfg;
  cfg.objective_id = "quad_pd_5";
  cfg.params = {2.0, 0.5, 1.0, 0.0, 1.0};
  cfg.schedule = {"power", 1.0, 1.8};
  cfg.x0 = Vector::Zero(5);
  cfg.v0 = Vector::Zero(5);
  cfg.T = 100.0;
  cfg.icfg.samples = 60;  // default abs_tol keeps the zero state stepping
  const RunSummary s = run(cfg);
  CHECK(s.degenerate);
  CHECK_FALSE(s.fitted_exponents.at("gap_shifted").ok);
  CHECK_FALSE(s.fitted_exponents.at("speed").ok);
  CHECK(s.final_dist_to_xstar == 0.0);
}

TEST_CASE("acceptance block is evaluated for a matching scenario") {
  RunConfig cfg;
  cfg.objective_id = "quad_line_2";
  cfg.params = {2.0, 0.5, 1.0, 0.0, 1.0};
  cfg.schedule = {"power", 1.0, 1.2};  // the strong-integrals scenario
  Vector x0(2);
  x0 << 5.0, 3.0;
  cfg.x0 = x0;
  cfg.T = 1e4;
  cfg.icfg.abs_tol = 1e-300;
  const RunSummary s = run(cfg);
  bool found = false;
  for (const auto& c : s.acceptance) {
    if (c.id == "A10") {
      found = true;
      CHECK(c.status == "pass");
    } else if (c.id == "A9") {
      CHECK(c.status == "skipped");
    }
  }
  CHECK(found);
}

TEST_CASE("sweep isolates per-cell failures and labels regimes") {
  RunConfig base = small_config();
  base.T = 200.0;
  const auto dir = temp_dir("sweep");
  base.out_dir = dir;
  const auto res = sweep(base, {0.0, 0.9, 1.5, 1.8}, {0.5}, 2);
  REQUIRE(res.cells.size() == 4);
  CHECK(res.cells[0].failed);  // p = 0 is inadmissible
  CHECK_FALSE(res.cells[1].failed);
  CHECK(res.cells[1].regime == "Strong");
  CHECK(res.cells[2].regime == "Critical");
  CHECK(res.cells[3].regime == "Weak");
  CHECK(res.table.find("Strong") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "regime_map.csv"));
  CHECK(std::filesystem::exists(dir / "sweep_summary.json"));
  CHECK(std::filesystem::exists(dir / "cell_q0.5_p0.9" / "summary.json"));

  CHECK_THROWS_AS(sweep(base, {}, {0.5}), InputError);
}

TEST_CASE("discrete config and runner") {
  const std::string text = R"({
    "objective": "quad_pd_5",
    "discrete": {"alpha": 2.0, "q": 0.5, "gamma": 1.0, "beta": 0.0, "s": "auto",
                 "a": 0.1, "p": 0.9},
    "N": 2000
  })";
  DiscreteConfig cfg = parse_discrete_config(text);
  CHECK(cfg.auto_stepsize);
  CHECK(cfg.iterations == 2000);
  const auto dir = temp_dir("discrete");
  cfg.out_dir = dir;
  const DiscreteSummary s = run_discrete(cfg);
  CHECK_FALSE(s.diverged);
  CHECK(s.note.find("exploratory") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "history.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  const json j = json::parse(slurp(dir / "summary.json"));
  CHECK(j["note"].get<std::string>().find("exploratory") != std::string::npos);
  CHECK(j["discrete"]["s"].get<double>() == doctest::Approx(0.05).epsilon(1e-9));

  // automatic stepsize is restricted to quadratics
  DiscreteConfig lse_cfg = cfg;
  lse_cfg.objective_id = "lse_5";
  lse_cfg.out_dir.clear();
  CHECK_THROWS_AS(run_discrete(lse_cfg), InputError);

  CHECK_THROWS_AS(parse_discrete_config("{\"objective\": 3}"), InputError);
}

TEST_CASE("diverging discrete runs are reported, not thrown") {
  DiscreteConfig cfg;
  cfg.objective_id = "quad_pd_5";
  cfg.params = {2.0, 0.5, 1.0, 0.0, 10.0, 0.1, 0.9, 1};  // oversized stepsize
  cfg.iterations = 10000;
  const DiscreteSummary s = run_discrete(cfg);
  CHECK(s.diverged);
  CHECK(s.note.find("diverged") != std::string::npos);
  CHECK(s.note.find("exploratory") != std::string::npos);
}

TEST_CASE("acceptance suite --only runs a single criterion") {
  acceptance::Options opts;
  opts.only = "euler_equivalence";
  const auto suite = acceptance::run_suite(opts);
  CHECK(suite.failures == 0);
  int evaluated = 0;
  for (const auto& r : suite.results) {
    if (r.id == "A9") {
      CHECK(r.status == "pass");
      ++evaluated;
    } else {
      CHECK(r.status == "skipped");
    }
  }
  CHECK(evaluated == 1);
  const json j = json::parse(suite.summary_json);
  CHECK(j["failures"] == 0);
  CHECK(j["results"]["A9"]["status"] == "pass");
}

TEST_CASE("output directory resolution honors TIKFLOW_OUT") {
  unsetenv("TIKFLOW_OUT");
  CHECK(resolve_out_dir("") == std::filesystem::path("out"));
  CHECK(resolve_out_dir("explicit") == std::filesystem::path("explicit"));
  setenv("TIKFLOW_OUT", "/tmp/tikflow_env", 1);
  CHECK(resolve_out_dir("") == std::filesystem::path("/tmp/tikflow_env"));
  CHECK(resolve_out_dir("explicit") == std::filesystem::path("explicit"));
  unsetenv("TIKFLOW_OUT");
}

TEST_CASE("named custom schedule runs through the pipeline") {
  RunConfig cfg = small_config();
  cfg.schedule.type = "power_over_log";
  const RunSummary s = run(cfg);
  CHECK(s.conditions.empirical);
  CHECK(s.regime.kind == dynamics::RegimeKind::Outside);  // classification needs a power law
}
