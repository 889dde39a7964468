#include "tikflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tikflow/acceptance.hpp"

namespace tikflow::experiments {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw InputError(path + ": expected an array of numbers");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw InputError(path + ": expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

double get_num(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

json check_to_json(const CheckResult& c) {
  return json{{"id", c.id}, {"status", c.status}, {"measured", c.measured}, {"detail", c.detail}};
}

json fit_to_json(const FitOutcome& f) {
  if (!f.ok) return json{{"status", "insufficient_data"}};
  return json{{"status", "ok"}, {"slope", f.fit.slope}, {"r2", f.fit.r2}, {"points", f.fit.points}};
}

json accumulator_to_json(const diagnostics::Accumulator& a) {
  return json{{"total", a.total}, {"last_decade_increment", a.last_decade_increment}};
}

json conditions_to_json(const dynamics::ConditionReport& r) {
  return json{{"c0", r.c0},
              {"c0_K", r.c0_K},
              {"c1", r.c1},
              {"c1_K1", r.c1_K1},
              {"c1_r", r.c1_r},
              {"c2", r.c2},
              {"c3", r.c3},
              {"c3_K3", r.c3_K3},
              {"integrable_tq_eps", r.integrable_tq_eps},
              {"integrable_t2qm1_eps", r.integrable_t2qm1_eps},
              {"empirical", r.empirical}};
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot open '" + file.string() + "' for writing");
  out << text;
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot read config file '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FitOutcome try_fit(const std::vector<double>& ts, const std::vector<double>& ys,
                   double tail_fraction) {
  FitOutcome out;
  try {
    out.fit = diagnostics::fit_decay_exponent(ts, ys, tail_fraction);
    out.ok = true;
  } catch (const InsufficientDataError&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

dynamics::TikhonovSchedule ScheduleSpec::make() const {
  return dynamics::named_schedule(type, a, p);
}

Vector default_offset(int dim) {
  Vector off(dim);
  const double pattern[2] = {5.0, 3.0};
  for (int i = 0; i < dim; ++i) off[i] = pattern[i % 2];
  return off;
}

Vector RunConfig::resolved_x0() const {
  if (x0) return *x0;
  const auto& obj = problems::corpus(objective_id);
  return obj.minimal_norm_minimizer() + default_offset(obj.dim());
}

Vector RunConfig::resolved_v0() const {
  if (v0) return *v0;
  return Vector::Zero(problems::corpus(objective_id).dim());
}

diagnostics::DiagnosticsConfig RunConfig::diag_config() const {
  diagnostics::DiagnosticsConfig cfg;
  cfg.weak.b = b_weak.value_or(0.0);
  cfg.strong.b = b_strong.value_or(0.0);
  return cfg;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (j.contains("schema_version") && j["schema_version"].get<int>() != kSchemaVersion)
    throw InputError("config.schema_version: unsupported version");

  RunConfig cfg;
  if (!j.contains("objective") || !j["objective"].is_string())
    throw InputError("config.objective: required string");
  cfg.objective_id = j["objective"].get<std::string>();

  const json dyn = j.value("dynamics", json::object());
  cfg.params.alpha = get_num(dyn, "alpha", cfg.params.alpha, "config.dynamics");
  cfg.params.q = get_num(dyn, "q", cfg.params.q, "config.dynamics");
  cfg.params.gamma = get_num(dyn, "gamma", cfg.params.gamma, "config.dynamics");
  cfg.params.beta = get_num(dyn, "beta", cfg.params.beta, "config.dynamics");
  cfg.params.t0 = get_num(dyn, "t0", cfg.params.t0, "config.dynamics");

  const json sch = j.value("schedule", json::object());
  cfg.schedule.type = sch.value("type", std::string("power"));
  cfg.schedule.a = get_num(sch, "a", cfg.schedule.a, "config.schedule");
  cfg.schedule.p = get_num(sch, "p", cfg.schedule.p, "config.schedule");

  if (j.contains("x0")) cfg.x0 = vector_from_json(j["x0"], "config.x0");
  if (j.contains("v0")) cfg.v0 = vector_from_json(j["v0"], "config.v0");
  cfg.T = get_num(j, "T", cfg.T, "config");

  const json ij = j.value("integrator", json::object());
  cfg.icfg.rel_tol = get_num(ij, "rel_tol", cfg.icfg.rel_tol, "config.integrator");
  cfg.icfg.abs_tol = get_num(ij, "abs_tol", cfg.icfg.abs_tol, "config.integrator");
  cfg.icfg.initial_step = get_num(ij, "initial_step", cfg.icfg.initial_step, "config.integrator");
  cfg.icfg.max_step = get_num(ij, "max_step", cfg.icfg.max_step, "config.integrator");
  cfg.icfg.samples = static_cast<int>(get_num(ij, "samples", cfg.icfg.samples, "config.integrator"));
  if (ij.contains("sample_times")) {
    Vector ts = vector_from_json(ij["sample_times"], "config.integrator.sample_times");
    cfg.icfg.sample_times.assign(ts.data(), ts.data() + ts.size());
  }

  const json ej = j.value("energy", json::object());
  if (ej.contains("b_weak")) cfg.b_weak = get_num(ej, "b_weak", 0.0, "config.energy");
  if (ej.contains("b_strong")) cfg.b_strong = get_num(ej, "b_strong", 0.0, "config.energy");

  cfg.tail_fraction = get_num(j, "tail_fraction", cfg.tail_fraction, "config");
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_text_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> errors;
  const auto add = [&](const std::string& msg) { errors.push_back(msg); };

  const problems::Objective* obj = nullptr;
  try {
    obj = &problems::corpus(cfg.objective_id);
  } catch (const InputError& e) {
    add(std::string("objective: ") + e.what());
  }
  try {
    cfg.params.validate();
  } catch (const InputError& e) {
    add(e.what());
  }
  try {
    cfg.schedule.make();
  } catch (const InputError& e) {
    add(std::string("schedule: ") + e.what());
  }
  if (!(cfg.T > cfg.params.t0)) add("T: must exceed dynamics.t0");
  try {
    cfg.icfg.validate(cfg.params.t0, cfg.T);
  } catch (const InputError& e) {
    add(e.what());
  }
  if (obj) {
    if (cfg.x0 && cfg.x0->size() != obj->dim()) add("x0: dimension does not match the objective");
    if (cfg.v0 && cfg.v0->size() != obj->dim()) add("v0: dimension does not match the objective");
  }
  const double alpha = cfg.params.alpha;
  if (cfg.b_weak && !(*cfg.b_weak > 0.0 && *cfg.b_weak < alpha))
    add("energy.b_weak: must lie in (0, alpha)");
  if (cfg.b_strong) {
    if (!(*cfg.b_strong > 0.0 && *cfg.b_strong < alpha))
      add("energy.b_strong: must lie in (0, alpha)");
    else if (cfg.params.gamma > 0.0 && !(*cfg.b_strong < alpha / 2.0))
      add("energy.b_strong: must be below alpha/2 when gamma > 0");
  }
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0))
    add("tail_fraction: must lie in (0, 1]");
  return errors;
}

std::filesystem::path resolve_out_dir(const std::filesystem::path& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("TIKFLOW_OUT"); env && *env) return env;
  return "out";
}

void write_trajectory_csv(const std::filesystem::path& file, const integrator::Trajectory& traj) {
  std::ostringstream out;
  const int d = traj.samples.empty() ? 0 : static_cast<int>(traj.samples.front().x.size());
  const bool annotated = !traj.samples.empty() && traj.diagnostics.size() == traj.samples.size();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  for (int i = 0; i < d; ++i) out << ",v" << i;
  if (annotated)
    out << ",gap_shifted,gap_plain,speed,grad_shifted_norm,reg_grad_norm,dist_to_xstar,"
           "dist_to_tikhonov,W,E_weak,E_strong,weak_coeff_negative,strong_pre_asymptotic";
  out << '\n';
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& s = traj.samples[k];
    out << fmt17(s.t);
    for (int i = 0; i < d; ++i) out << ',' << fmt17(s.x[i]);
    for (int i = 0; i < d; ++i) out << ',' << fmt17(s.v[i]);
    if (annotated) {
      const auto& g = traj.diagnostics[k];
      out << ',' << fmt17(g.gap_shifted) << ',' << fmt17(g.gap_plain) << ',' << fmt17(g.speed)
          << ',' << fmt17(g.grad_shifted_norm) << ',' << fmt17(g.reg_grad_norm) << ','
          << fmt17(g.dist_to_xstar) << ',' << fmt17(g.dist_to_tikhonov) << ',' << fmt17(g.W)
          << ',' << fmt17(g.E_weak) << ',' << fmt17(g.E_strong) << ','
          << (g.weak_coeff_negative ? 1 : 0) << ',' << (g.strong_pre_asymptotic ? 1 : 0);
    }
    out << '\n';
  }
  write_text_file(file, out.str());
}

namespace {

std::vector<CheckResult> run_checks(const RunConfig& cfg, const integrator::Trajectory& traj,
                                    const RunSummary& s,
                                    const std::map<std::string, FitOutcome>& fits) {
  std::vector<CheckResult> checks;
  const auto& diag = traj.diagnostics;
  const auto push = [&](std::string id, bool pass, double measured, std::string detail) {
    checks.push_back({std::move(id), pass ? "pass" : "fail", measured, std::move(detail)});
  };
  const auto skip = [&](std::string id, std::string detail) {
    checks.push_back({std::move(id), "skipped", 0.0, std::move(detail)});
  };

  {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < diag.size(); ++k)
      worst = std::max(worst, diag[k + 1].W - diag[k].W - 1e-8 * (1.0 + std::abs(diag[k].W)));
    push("W_monotone", worst <= 0.0, worst,
         "max of W(t_{k+1}) - W(t_k) - 1e-8 (1 + |W(t_k)|) over samples");
  }
  {
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& g : diag) min_gap = std::min({min_gap, g.gap_shifted, g.gap_plain});
    push("gap_nonnegative", min_gap >= -1e-10, min_gap, "min over samples of both value gaps");
  }

  if (!cfg.schedule.is_power()) return checks;
  const double q = cfg.params.q, p = cfg.schedule.p;

  const auto ratio = [](const diagnostics::Accumulator& a) {
    return a.total > 0.0 ? a.last_decade_increment / a.total : 0.0;
  };
  const auto fit_of = [&](const std::string& name) -> const FitOutcome& { return fits.at(name); };

  switch (s.regime.kind) {
    case dynamics::RegimeKind::Weak: {
      if (fit_of("E_weak").ok)
        push("weak_E_bounded", fit_of("E_weak").fit.slope <= 0.05, fit_of("E_weak").fit.slope,
             "tail slope of log E_weak vs log t");
      else
        skip("weak_E_bounded", "insufficient positive E_weak samples in the tail");
      const diagnostics::Accumulator& grad_acc =
          cfg.params.gamma > 0.0 ? s.integrals.I_grad2q : s.integrals.I_grad2qm1;
      if (s.integrals.I_speed.total > 0.0 || s.integrals.I_gap.total > 0.0) {
        const double worst =
            std::max({ratio(s.integrals.I_speed), ratio(s.integrals.I_gap), ratio(grad_acc)});
        push("weak_saturation", worst <= 0.05, worst,
             "max last-decade increment fraction of I_speed, I_gap, gradient integral");
      } else {
        skip("weak_saturation", "all accumulator totals are zero");
      }
      break;
    }
    case dynamics::RegimeKind::Strong: {
      const double first = diag.empty() ? 0.0 : diag.front().dist_to_tikhonov;
      const double last = diag.empty() ? 0.0 : diag.back().dist_to_tikhonov;
      if (first > 0.0)
        push("strong_dist_tik_decreasing", last <= first / 10.0, last,
             "final ||x - x_t|| vs a tenth of the initial value " + fmt17(first));
      else
        skip("strong_dist_tik_decreasing", "trajectory starts on the Tikhonov curve");
      const double r = std::max(q, p - q) + 0.05;
      const double bound = std::max(2.0 * r - 2.0, r - 1.0) + 0.1;
      if (fit_of("E_strong").ok)
        push("strong_E_envelope", fit_of("E_strong").fit.slope <= bound,
             fit_of("E_strong").fit.slope, "tail slope of log E_strong; bound " + fmt17(bound));
      else
        skip("strong_E_envelope", "insufficient positive E_strong samples in the tail");
      if (p > 2.0 * q) {
        const double worst = std::max({ratio(s.integrals.I_speed), ratio(s.integrals.I_gap),
                                       ratio(s.integrals.I_reg_grad)});
        push("strong_saturation", worst <= 0.05, worst,
             "max last-decade increment fraction of I_speed, I_gap, I_reg_grad (p > 2q)");
      }
      break;
    }
    case dynamics::RegimeKind::Critical: {
      double sup = 0.0;
      bool finite = true;
      for (const auto& smp : traj.samples) {
        const double norm = smp.x.norm();
        finite = finite && std::isfinite(norm);
        sup = std::max(sup, norm);
      }
      push("critical_bounded", finite, sup, "sup ||x(t)|| over samples");
      for (const char* name : {"t2q_gap_shifted", "tq_speed"}) {
        if (fit_of(name).ok)
          push(std::string("critical_rate_") + name, fit_of(name).fit.slope <= 0.05,
               fit_of(name).fit.slope, "tail slope must stay below 0.05");
        else
          skip(std::string("critical_rate_") + name, "insufficient positive samples");
      }
      break;
    }
    case dynamics::RegimeKind::Outside:
      break;
  }
  return checks;
}

json summary_to_json(const RunConfig& cfg, const RunSummary& s, const Vector& x0,
                     const Vector& v0) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["objective"] = cfg.objective_id;
  j["dynamics"] = {{"alpha", cfg.params.alpha},
                   {"q", cfg.params.q},
                   {"gamma", cfg.params.gamma},
                   {"beta", cfg.params.beta},
                   {"t0", cfg.params.t0}};
  j["schedule"] = {{"type", cfg.schedule.type}, {"a", cfg.schedule.a}, {"p", cfg.schedule.p}};
  j["x0"] = vector_to_json(x0);
  j["v0"] = vector_to_json(v0);
  j["T"] = cfg.T;
  j["tail_fraction"] = cfg.tail_fraction;
  j["regime"] = {{"kind", dynamics::to_string(s.regime.kind)}, {"rationale", s.regime.rationale}};
  j["conditions"] = conditions_to_json(s.conditions);
  j["integrator_stats"] = {{"steps_accepted", s.stats.steps_accepted},
                           {"steps_rejected", s.stats.steps_rejected},
                           {"gradient_evals", s.stats.gradient_evals}};
  json fits = json::object();
  for (const auto& [name, fit] : s.fitted_exponents) fits[name] = fit_to_json(fit);
  j["fitted_exponents"] = fits;
  j["final"] = {{"dist_to_xstar", s.final_dist_to_xstar},
                {"dist_to_tikhonov", s.final_dist_to_tikhonov}};
  j["integrals"] = {{"I_speed", accumulator_to_json(s.integrals.I_speed)},
                    {"I_gap", accumulator_to_json(s.integrals.I_gap)},
                    {"I_grad2q", accumulator_to_json(s.integrals.I_grad2q)},
                    {"I_grad2qm1", accumulator_to_json(s.integrals.I_grad2qm1)},
                    {"I_reg_grad", accumulator_to_json(s.integrals.I_reg_grad)},
                    {"I_eps_x", accumulator_to_json(s.integrals.I_eps_x)}};
  json checks = json::array();
  for (const auto& c : s.checks) checks.push_back(check_to_json(c));
  j["checks"] = checks;
  json acc = json::object();
  for (const auto& c : s.acceptance)
    acc[c.id] = {{"status", c.status}, {"measured", c.measured}, {"detail", c.detail}};
  j["acceptance"] = acc;
  j["degenerate"] = s.degenerate;
  return j;
}

}  // namespace

RunSummary run(const RunConfig& cfg, integrator::Trajectory* traj_out) {
  if (auto errors = validate(cfg); !errors.empty()) {
    std::string joined = "invalid run config:";
    for (const auto& e : errors) joined += "\n  " + e;
    throw InputError(joined);
  }
  const auto& obj = problems::corpus(cfg.objective_id);
  const auto sched = cfg.schedule.make();
  const Vector x0 = cfg.resolved_x0();
  const Vector v0 = cfg.resolved_v0();

  integrator::Trajectory traj =
      integrator::integrate(cfg.params, sched, obj, x0, v0, cfg.T, cfg.icfg);
  diagnostics::annotate(traj, cfg.params, sched, obj, cfg.diag_config());

  RunSummary s;
  if (cfg.schedule.is_power()) {
    s.regime = dynamics::classify_regime(cfg.schedule.p, cfg.params.q, cfg.schedule.a,
                                         cfg.params.alpha, cfg.params.gamma);
    s.conditions = dynamics::check_conditions(cfg.params,
                                              dynamics::PowerSchedule{cfg.schedule.a, cfg.schedule.p});
  } else {
    s.regime = {dynamics::RegimeKind::Outside,
                "regime classification is defined for power schedules"};
    s.conditions = dynamics::check_conditions_sampled(cfg.params, sched);
  }

  std::vector<double> ts(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) ts[k] = traj.samples[k].t;
  const auto series = [&](auto&& get) {
    std::vector<double> ys(traj.diagnostics.size());
    for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) ys[k] = get(traj.diagnostics[k], k);
    return ys;
  };
  const double q = cfg.params.q;
  const std::pair<const char*, std::vector<double>> named_series[] = {
      {"gap_shifted", series([](const auto& g, std::size_t) { return g.gap_shifted; })},
      {"gap_plain", series([](const auto& g, std::size_t) { return g.gap_plain; })},
      {"speed", series([](const auto& g, std::size_t) { return g.speed; })},
      {"grad_shifted_norm",
       series([](const auto& g, std::size_t) { return g.grad_shifted_norm; })},
      {"dist_to_xstar", series([](const auto& g, std::size_t) { return g.dist_to_xstar; })},
      {"dist_to_tikhonov", series([](const auto& g, std::size_t) { return g.dist_to_tikhonov; })},
      {"E_weak", series([](const auto& g, std::size_t) { return g.E_weak; })},
      {"E_strong", series([](const auto& g, std::size_t) {
         // pre-asymptotic samples are excluded from envelope fits
         return g.strong_pre_asymptotic ? std::numeric_limits<double>::quiet_NaN() : g.E_strong;
       })},
      {"t2q_gap_shifted", series([&](const auto& g, std::size_t k) {
         return std::pow(ts[k], 2.0 * q) * g.gap_shifted;
       })},
      {"tq_speed",
       series([&](const auto& g, std::size_t k) { return std::pow(ts[k], q) * g.speed; })}};
  for (const auto& [name, ys] : named_series)
    s.fitted_exponents[name] = try_fit(ts, ys, cfg.tail_fraction);

  s.degenerate = !s.fitted_exponents["gap_shifted"].ok && !s.fitted_exponents["speed"].ok;
  if (!traj.diagnostics.empty()) {
    s.final_dist_to_xstar = traj.diagnostics.back().dist_to_xstar;
    s.final_dist_to_tikhonov = traj.diagnostics.back().dist_to_tikhonov;
  }
  s.integrals = traj.integrals;
  s.stats = traj.meta.stats;
  s.checks = run_checks(cfg, traj, s, s.fitted_exponents);
  s.acceptance = acceptance::evaluate_for_run(cfg, traj, s);
  s.summary_json = summary_to_json(cfg, s, x0, v0).dump(2) + "\n";

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_trajectory_csv(cfg.out_dir / "trajectory.csv", traj);
    write_text_file(cfg.out_dir / "summary.json", s.summary_json);
  }
  if (traj_out) *traj_out = std::move(traj);
  return s;
}

SweepResult sweep(const RunConfig& base, const std::vector<double>& ps,
                  const std::vector<double>& qs, int workers) {
  if (ps.empty() || qs.empty()) throw InputError("sweep: the (p, q) grid must be nonempty");

  struct Task {
    double q, p;
    RunConfig cfg;
  };
  std::vector<Task> tasks;
  for (double qv : qs) {
    for (double pv : ps) {
      RunConfig cfg = base;
      cfg.params.q = qv;
      cfg.schedule.p = pv;
      if (!base.out_dir.empty()) {
        std::ostringstream dir;
        dir << "cell_q" << qv << "_p" << pv;
        cfg.out_dir = base.out_dir / dir.str();
      }
      tasks.push_back({qv, pv, std::move(cfg)});
    }
  }

  std::vector<SweepCell> cells(tasks.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(tasks.size(), workers > 0 ? static_cast<std::size_t>(workers) : hw);
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      SweepCell cell;
      cell.q = tasks[i].q;
      cell.p = tasks[i].p;
      try {
        RunSummary s = run(tasks[i].cfg);
        cell.regime = dynamics::to_string(s.regime.kind);
        cell.final_dist_to_xstar = s.final_dist_to_xstar;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells[i] = std::move(cell);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SweepResult res;
  res.cells = std::move(cells);

  std::ostringstream table;
  table << "final ||x(T) - x*|| by regime (rows q, columns p)\n";
  table << "q\\p";
  for (double pv : ps) table << '\t' << pv;
  table << '\n';
  std::size_t idx = 0;
  for (double qv : qs) {
    table << qv;
    for (std::size_t j = 0; j < ps.size(); ++j, ++idx) {
      const auto& c = res.cells[idx];
      if (c.failed)
        table << "\terror";
      else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "\t%s(%.3g)", c.regime.c_str(), c.final_dist_to_xstar);
        table << buf;
      }
    }
    table << '\n';
  }
  res.table = table.str();

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    std::ostringstream csv;
    csv << "q,p,regime,final_dist_to_xstar\n";
    json jcells = json::array();
    for (const auto& c : res.cells) {
      csv << fmt17(c.q) << ',' << fmt17(c.p) << ',' << (c.failed ? "error" : c.regime) << ','
          << fmt17(c.final_dist_to_xstar) << '\n';
      jcells.push_back(json{{"q", c.q},
                            {"p", c.p},
                            {"regime", c.failed ? "error" : c.regime},
                            {"final_dist_to_xstar", c.final_dist_to_xstar},
                            {"error", c.error}});
    }
    write_text_file(base.out_dir / "regime_map.csv", csv.str());
    json j;
    j["schema_version"] = kSchemaVersion;
    j["cells"] = jcells;
    write_text_file(base.out_dir / "sweep_summary.json", j.dump(2) + "\n");
  }
  return res;
}

DiscreteConfig parse_discrete_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  DiscreteConfig cfg;
  if (!j.contains("objective") || !j["objective"].is_string())
    throw InputError("config.objective: required string");
  cfg.objective_id = j["objective"].get<std::string>();
  const json dj = j.value("discrete", json::object());
  cfg.params.alpha = get_num(dj, "alpha", cfg.params.alpha, "config.discrete");
  cfg.params.q = get_num(dj, "q", cfg.params.q, "config.discrete");
  cfg.params.gamma = get_num(dj, "gamma", cfg.params.gamma, "config.discrete");
  cfg.params.beta = get_num(dj, "beta", cfg.params.beta, "config.discrete");
  cfg.params.a = get_num(dj, "a", cfg.params.a, "config.discrete");
  cfg.params.p = get_num(dj, "p", cfg.params.p, "config.discrete");
  cfg.params.n0 = static_cast<long>(get_num(dj, "n0", 1.0, "config.discrete"));
  if (dj.contains("s") && dj["s"].is_string()) {
    if (dj["s"].get<std::string>() != "auto")
      throw InputError("config.discrete.s: expected a number or \"auto\"");
    cfg.auto_stepsize = true;
  } else if (dj.contains("s")) {
    cfg.params.s = get_num(dj, "s", cfg.params.s, "config.discrete");
  } else {
    cfg.auto_stepsize = true;
  }
  if (j.contains("x0")) cfg.x0 = vector_from_json(j["x0"], "config.x0");
  if (j.contains("x1")) cfg.x1 = vector_from_json(j["x1"], "config.x1");
  cfg.iterations = static_cast<long>(get_num(j, "N", 1e5, "config"));
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  return cfg;
}

DiscreteConfig load_discrete_config(const std::filesystem::path& path) {
  try {
    return parse_discrete_config(read_text_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

DiscreteSummary run_discrete(const DiscreteConfig& cfg) {
  const auto& obj = problems::corpus(cfg.objective_id);
  discrete::DiscreteParams params = cfg.params;
  if (cfg.auto_stepsize) {
    if (dynamic_cast<const problems::QuadraticObjective*>(&obj) == nullptr)
      throw InputError(
          "discrete.s: automatic stepsize is defined for quadratics only; set s explicitly");
    const double L = discrete::estimate_lipschitz(obj);
    if (!(L > 0.0)) throw InputError("discrete.s: Lipschitz estimate degenerate, set s explicitly");
    params.s = 1.0 / (2.0 * L);
  }
  params.validate();

  const Vector x0 = cfg.x0 ? *cfg.x0 : obj.minimal_norm_minimizer() + default_offset(obj.dim());
  const Vector x1 = cfg.x1 ? *cfg.x1 : x0;

  DiscreteSummary out;
  out.note = "exploratory: discrete-time convergence rates are not asserted";
  out.iterations = cfg.iterations;

  discrete::RunResult res;
  try {
    res = discrete::run(params, obj, x0, x1, cfg.iterations);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.note = std::string(e.what()) + "; " + out.note;
  }
  if (!out.diverged) {
    out.final_gap = obj.value(res.x_final) - obj.min_value();
    out.final_dist_to_xstar = (res.x_final - obj.minimal_norm_minimizer()).norm();
  }

  json j;
  j["schema_version"] = kSchemaVersion;
  j["objective"] = cfg.objective_id;
  j["discrete"] = {{"alpha", params.alpha}, {"q", params.q},     {"gamma", params.gamma},
                   {"beta", params.beta},   {"s", params.s},     {"a", params.a},
                   {"p", params.p},         {"n0", params.n0}};
  j["N"] = cfg.iterations;
  j["diverged"] = out.diverged;
  j["final_gap"] = out.final_gap;
  j["final_dist_to_xstar"] = out.final_dist_to_xstar;
  j["note"] = out.note;
  out.summary_json = j.dump(2) + "\n";

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream csv;
    csv << "n,gap,dist_to_xstar\n";
    for (const auto& h : res.history)
      csv << h.n << ',' << fmt17(h.gap) << ',' << fmt17(h.dist_to_xstar) << '\n';
    write_text_file(cfg.out_dir / "history.csv", csv.str());
    write_text_file(cfg.out_dir / "summary.json", out.summary_json);
  }
  return out;
}

}  // namespace tikflow::experiments
