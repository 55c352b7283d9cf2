#include "jsqdiff/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "jsqdiff/checks.hpp"
#include "jsqdiff/csv.hpp"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/hitting.hpp"
#include "jsqdiff/mmn.hpp"
#include "jsqdiff/prelimit.hpp"
#include "jsqdiff/regen.hpp"
#include "jsqdiff/tails.hpp"

namespace jsqdiff {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<const char*, Experiment> kExperiments[] = {
    {"tails", Experiment::tails},       {"extrema", Experiment::extrema},
    {"hitting", Experiment::hitting},   {"prelimit", Experiment::prelimit},
    {"mmn", Experiment::mmn},           {"validate", Experiment::validate},
};

const char* const kKeys[] = {"experiment", "beta",      "dt",       "horizon",         "cycles",
                             "replicas",   "seed",      "B",        "workers",         "q1_levels",
                             "q2_levels",  "n",         "output_dir", "sample_interval", "warmup",
                             "paths",      "max_horizon", "q1_fit",  "q2_fit"};

template <class T>
std::vector<T> scalar_or_list(const Json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::pair<double, double> window_from(const Json& v) {
  const auto w = v.get<std::vector<double>>();
  if (w.size() != 2) throw ConfigError("expected [lo, hi]");
  return {w[0], w[1]};
}

std::uint64_t non_negative_integer(const Json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError("must be non-negative");
    return v.get<std::uint64_t>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) throw ConfigError("must be an integer");
    return static_cast<std::uint64_t>(d);
  }
  throw ConfigError("must be an integer");
}

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Runs fn(i) for i in [0, n) on at most `workers` threads. Results are
// indexed by i, so the merge order never depends on scheduling. The exception
// of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::ofstream open_output(const fs::path& path, RunResult& result) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw fs::filesystem_error("cannot open output file", path,
                               std::make_error_code(std::errc::io_error));
  }
  os.exceptions(std::ios::failbit | std::ios::badbit);
  result.files.push_back(path);
  return os;
}

void write_json(const fs::path& path, const Json& j, RunResult& result) {
  auto os = open_output(path, result);
  os << j.dump(2) << '\n';
}

Json estimate_json(const ProbEstimate& e) {
  return Json{{"value", e.value}, {"std_err", e.std_err}, {"n", e.n}};
}

Json fit_json(const FitResult& f) {
  return Json{{"model", to_string(f.model)},
              {"slope", f.slope},
              {"intercept", f.intercept},
              {"r_squared", f.r_squared},
              {"level_range", {f.level_range.first, f.level_range.second}},
              {"points", f.points}};
}

void write_tail_csv(const fs::path& path, const std::vector<TailPoint>& points,
                    RunResult& result) {
  auto os = open_output(path, result);
  csv::write_row(os, {"level", "prob", "std_err"});
  for (const auto& p : points) {
    csv::write_row(os, {csv::number(p.level), csv::number(p.prob), csv::number(p.std_err)});
  }
}

// Output naming: one file per beta (and per n) only when the list has more
// than one entry.
struct Naming {
  std::string suffix;
  fs::path dir;
  fs::path operator()(const std::string& stem, const std::string& ext) const {
    return dir / (stem + suffix + ext);
  }
};

std::string beta_suffix(const ExperimentConfig& c, double beta) {
  return c.beta.size() > 1 ? "_beta" + fmt_g(beta) : "";
}

DiffusionParams diffusion_params(const ExperimentConfig& c, double beta) {
  DiffusionParams p;
  p.beta = beta;
  p.dt = c.dt;
  p.seed = c.seed;
  return p;
}

RegenConfig regen_config(const ExperimentConfig& c, const DiffusionParams& p, double B) {
  auto rc = RegenConfig::for_params(p, B);
  if (!c.q1_levels.empty()) rc.grid.q1_depths = c.q1_levels;
  if (!c.q2_levels.empty()) rc.grid.q2_levels = c.q2_levels;
  rc.grid.validate();
  return rc;
}

struct CycleRun {
  std::vector<Cycle> cycles;
  std::vector<std::size_t> per_replica;
  std::vector<std::uint64_t> streams;
};

// Splits `total` cycles evenly over the replicas (stream r for replica r) and
// concatenates them in replica order.
CycleRun collect_cycles(const ExperimentConfig& c, const DiffusionParams& p,
                        const RegenConfig& rc, std::size_t total) {
  const std::size_t reps = c.replicas;
  std::vector<std::vector<Cycle>> parts(reps);
  parallel_for(reps, c.workers, [&](std::size_t r) {
    auto cfg = rc;
    cfg.max_cycles = total / reps + (r < total % reps ? 1 : 0);
    if (cfg.max_cycles == 0) return;
    parts[r] = simulate_cycles(p, cfg, c.max_horizon, r);
  });
  CycleRun run;
  for (std::size_t r = 0; r < reps; ++r) {
    run.per_replica.push_back(parts[r].size());
    run.streams.push_back(r);
    std::move(parts[r].begin(), parts[r].end(), std::back_inserter(run.cycles));
  }
  return run;
}

Json diagnostics_json(std::span<const Cycle> cycles) {
  if (cycles.size() < 30) return nullptr;
  const auto d = cycle_diagnostics(cycles);
  return Json{{"n", d.n},
              {"mean_duration", d.mean_duration},
              {"mean_duration_se", d.mean_duration_se},
              {"duration_variance", d.duration_variance},
              {"lag1_autocorrelation", d.lag1_autocorrelation}};
}

bool in_bracket(double x, double lo, double hi) { return x >= lo && x <= hi; }

struct Checks {
  Json flags = Json::object();
  bool all = true;
  void add(const std::string& name, bool ok) {
    flags[name] = ok;
    all = all && ok;
  }
};

Json summary_head(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = to_string(c.experiment);
  j["config"] = to_json(c);
  return j;
}

// ---------------------------------------------------------------- tails

struct TailsOutcome {
  double beta = 0.0;
  double q2_slope = 0.0;
  bool ok = false;
};

TailsOutcome run_tails_one(const ExperimentConfig& c, double beta, const Naming& name,
                           RunResult& result, std::ostream& log) {
  const auto p = diffusion_params(c, beta);
  const double B = c.regen_level(beta);
  const auto rc = regen_config(c, p, B);
  log << "tails: beta=" << beta << " B=" << B << " cycles=" << c.cycles << '\n';
  const auto run = collect_cycles(c, p, rc, c.cycles);

  const auto q1 = tail_curve(run.cycles, TailCoordinate::q1_lower, rc.grid.q1_depths);
  const auto q2 = tail_curve(run.cycles, TailCoordinate::q2_upper, rc.grid.q2_levels);
  write_tail_csv(name("tails_q1", ".csv"), q1.points, result);
  write_tail_csv(name("tails_q2", ".csv"), q2.points, result);

  const auto q1_win = c.q1_fit.value_or(std::pair{1.0, 3.0});
  const auto q2_win = c.q2_fit.value_or(std::pair{2.0 * B, 2.0 * B + 4.0 / beta});
  const auto q1_curve = q1.window(q1_win.first, q1_win.second);
  const auto q2_curve = q2.window(q2_win.first, q2_win.second);

  Json j = summary_head(c);
  j["beta"] = beta;
  j["B"] = B;
  j["seed"] = c.seed;
  j["streams"] = run.streams;
  j["cycles_per_replica"] = run.per_replica;
  j["cycles"] = run.cycles.size();
  j["cycle_diagnostics"] = diagnostics_json(run.cycles);
  std::vector<std::string> warnings = q1.warnings;
  warnings.insert(warnings.end(), q2.warnings.begin(), q2.warnings.end());
  j["warnings"] = warnings;

  Checks checks;
  checks.add("cycles_complete", run.cycles.size() == c.cycles);
  TailsOutcome out{beta, 0.0, false};
  try {
    const auto q2_exp = fit_exponential(q2_curve);
    const auto q2_gauss = fit_gaussian(q2_curve);
    out.q2_slope = q2_exp.slope;
    j["q2"] = Json{{"window", {q2_win.first, q2_win.second}},
                   {"bracket", {beta / 16.0, 2.0 * beta}},
                   {"exponential", fit_json(q2_exp)},
                   {"gaussian", fit_json(q2_gauss)}};
    checks.add("q2_slope_in_bracket", in_bracket(-q2_exp.slope, beta / 16.0, 2.0 * beta));
    checks.add("q2_r_squared", q2_exp.r_squared >= 0.98);
  } catch (const InsufficientDataError& e) {
    j["q2"] = Json{{"error", e.what()}};
    checks.add("q2_fit", false);
  }
  try {
    const auto q1_exp = fit_exponential(q1_curve);
    const auto q1_gauss = fit_gaussian(q1_curve);
    j["q1"] = Json{{"window", {q1_win.first, q1_win.second}},
                   {"bracket", {1.0 / 16.0, 4.0}},
                   {"exponential", fit_json(q1_exp)},
                   {"gaussian", fit_json(q1_gauss)}};
    checks.add("q1_slope_in_bracket", in_bracket(-q1_gauss.slope, 1.0 / 16.0, 4.0));
    checks.add("q1_gaussian_beats_exponential", q1_gauss.r_squared > q1_exp.r_squared);
  } catch (const InsufficientDataError& e) {
    j["q1"] = Json{{"error", e.what()}};
    checks.add("q1_fit", false);
  }
  j["checks"] = checks.flags;
  j["pass"] = checks.all;
  write_json(name("fits", ".json"), j, result);
  out.ok = checks.all;
  return out;
}

bool run_tails(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  const fs::path dir = c.output_dir;
  bool all = true;
  std::vector<TailsOutcome> outcomes;
  for (double beta : c.beta) {
    outcomes.push_back(run_tails_one(c, beta, Naming{beta_suffix(c, beta), dir}, result, log));
    all = all && outcomes.back().ok;
  }
  if (outcomes.size() > 1) {
    std::sort(outcomes.begin(), outcomes.end(),
              [](const auto& a, const auto& b) { return a.beta < b.beta; });
    Json j = summary_head(c);
    Json rows = Json::array();
    bool increasing = true;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      rows.push_back({{"beta", outcomes[i].beta}, {"q2_slope", outcomes[i].q2_slope}});
      if (i > 0 && !(std::abs(outcomes[i].q2_slope) > std::abs(outcomes[i - 1].q2_slope))) {
        increasing = false;
      }
    }
    j["q2_slopes"] = rows;
    j["checks"] = Json{{"q2_slope_magnitude_increasing", increasing}};
    j["pass"] = increasing;
    write_json(dir / "scaling.json", j, result);
    all = all && increasing;
  }
  return all;
}

// ---------------------------------------------------------------- extrema

bool run_extrema(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  bool all = true;
  for (double beta : c.beta) {
    const Naming name{beta_suffix(c, beta), c.output_dir};
    const auto p = diffusion_params(c, beta);
    const auto checkpoints = geometric_checkpoints(c.horizon);
    if (checkpoints.size() < 2) throw ConfigError("horizon: extrema needs horizon >= 10");
    log << "extrema: beta=" << beta << " horizon=" << c.horizon << '\n';
    std::vector<ExtremaSeries> series(c.replicas);
    parallel_for(c.replicas, c.workers,
                 [&](std::size_t r) { series[r] = extrema_track(p, c.horizon, checkpoints, r); });

    auto os = open_output(name("extrema", ".csv"), result);
    csv::write_row(os, {"replica", "t", "running_min_q1", "running_max_q2",
                        "min_q1_over_sqrt_log_t", "max_q2_over_log_t"});
    const double q1_lo = -2.0 * std::sqrt(2.0) * 1.25, q1_hi = -0.5;
    const double q2_lo = 0.5 / beta, q2_hi = 40.0 / beta;
    Checks checks;
    Json finals = Json::array();
    for (std::size_t r = 0; r < series.size(); ++r) {
      for (const auto& cp : series[r].checkpoints) {
        csv::write_row(os, {std::to_string(r), csv::number(cp.t), csv::number(cp.running_min_q1),
                            csv::number(cp.running_max_q2),
                            csv::number(cp.min_q1_over_sqrt_log_t),
                            csv::number(cp.max_q2_over_log_t)});
      }
      const auto& last = series[r].checkpoints.back();
      const auto change = series[r].relative_change_last_two();
      finals.push_back({{"stream", r},
                        {"t", last.t},
                        {"min_q1_over_sqrt_log_t", last.min_q1_over_sqrt_log_t},
                        {"max_q2_over_log_t", last.max_q2_over_log_t},
                        {"relative_change_last_two", {change.first, change.second}}});
      const std::string tag = "_replica" + std::to_string(r);
      checks.add("min_q1_contained" + tag, in_bracket(last.min_q1_over_sqrt_log_t, q1_lo, q1_hi));
      checks.add("max_q2_contained" + tag, in_bracket(last.max_q2_over_log_t, q2_lo, q2_hi));
    }
    Json j = summary_head(c);
    j["beta"] = beta;
    j["seed"] = c.seed;
    j["note"] = "containment at a finite horizon; almost-sure limits are not observable";
    j["brackets"] = {{"min_q1_over_sqrt_log_t", {q1_lo, q1_hi}},
                     {"max_q2_over_log_t", {q2_lo, q2_hi}}};
    j["final"] = finals;
    j["checks"] = checks.flags;
    j["pass"] = checks.all;
    write_json(name("extrema_summary", ".json"), j, result);
    all = all && checks.all;
  }
  return all;
}

// ---------------------------------------------------------------- hitting

bool run_hitting(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  bool all = true;
  for (double beta : c.beta) {
    const Naming name{beta_suffix(c, beta), c.output_dir};
    const auto p = diffusion_params(c, beta);
    const double B = c.regen_level(beta);
    log << "hitting: beta=" << beta << " paths=" << c.paths << " cycles=" << c.cycles << '\n';

    BmHitMcOptions mc;
    mc.paths = c.paths;
    mc.dt = c.dt;
    mc.seed = c.seed;
    const auto oracle = check_bm_hit_oracle(beta, mc);

    std::vector<double> q2_targets;
    if (c.q2_levels.empty()) {
      for (int k = 1; k <= 4; ++k) q2_targets.push_back(2.0 * B + k / beta);
    } else {
      for (double y : c.q2_levels) {
        if (y >= 2.0 * B) q2_targets.push_back(y);
      }
    }
    const std::vector<double> q1_targets =
        c.q1_levels.empty() ? std::vector<double>{1.0, 2.0, 3.0, 4.0} : c.q1_levels;

    auto rc = RegenConfig::for_params(p, B);
    const auto run = collect_cycles(c, p, rc, c.cycles);

    auto os = open_output(name("hitting", ".csv"), result);
    csv::write_row(os, {"target", "level", "prob", "std_err", "lower_bound"});
    Checks checks;
    checks.add("bm_oracle_within_3se", oracle.pass);
    checks.add("cycles_complete", run.cycles.size() == c.cycles);
    bool above_bound = true, monotone = true;
    double prev = 1.0;
    for (double y : q2_targets) {
      const auto e = hit_fraction(run.cycles, HitTarget::q2_up(y));
      const double lb = q2_hit_lower_bound(beta, B, y);
      csv::write_row(os, {"q2_up", csv::number(y), csv::number(e.value), csv::number(e.std_err),
                          csv::number(lb)});
      above_bound = above_bound && e.value >= lb - 3.0 * e.std_err;
      monotone = monotone && e.value <= prev;
      prev = e.value;
    }
    prev = 1.0;
    for (double x : q1_targets) {
      const auto e = hit_fraction(run.cycles, HitTarget::q1_down(x));
      csv::write_row(os, {"q1_down", csv::number(x), csv::number(e.value), csv::number(e.std_err),
                          ""});
      monotone = monotone && e.value <= prev;
      prev = e.value;
    }
    checks.add("q2_above_lower_bound", above_bound);
    checks.add("monotone_in_level", monotone);

    Json j = summary_head(c);
    j["beta"] = beta;
    j["B"] = B;
    j["seed"] = c.seed;
    j["streams"] = run.streams;
    j["bm_oracle"] = {{"drift", -beta},
                      {"start", 0.0},
                      {"up", 1.0},
                      {"down", -1.0},
                      {"closed_form", oracle.closed_form},
                      {"mc", estimate_json(oracle.mc)},
                      {"z_score", oracle.z_score}};
    j["cycles"] = run.cycles.size();
    j["checks"] = checks.flags;
    j["pass"] = checks.all;
    write_json(name("hitting_summary", ".json"), j, result);
    all = all && checks.all;
  }
  return all;
}

// ---------------------------------------------------------------- prelimit

bool run_prelimit(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  bool all = true;
  for (double beta : c.beta) {
    const auto p = diffusion_params(c, beta);
    const double B = c.regen_level(beta);
    std::vector<double> levels =
        c.q2_levels.empty() ? std::vector<double>{0.5, 1.0, 1.5, 2.0, 3.0, 4.0} : c.q2_levels;
    auto rc = regen_config(c, p, B);
    rc.grid.q2_levels = levels;
    log << "prelimit: beta=" << beta << " diffusion cycles=" << c.cycles << '\n';
    const auto run = collect_cycles(c, p, rc, c.cycles);
    const auto curve = tail_curve(run.cycles, TailCoordinate::q2_upper, levels);
    std::vector<DiffusionTailPoint> diffusion;
    for (const auto& pt : curve.points) {
      diffusion.push_back({pt.level, {pt.prob, pt.std_err, run.cycles.size()}});
    }

    Checks checks;
    Json per_n = Json::array();
    std::vector<std::pair<std::int64_t, double>> discrepancy;
    for (std::int64_t n : c.n) {
      Naming name{beta_suffix(c, beta) + (c.n.size() > 1 ? "_n" + std::to_string(n) : ""),
                  c.output_dir};
      JsqParams jp;
      jp.n_servers = n;
      jp.beta = beta;
      jp.horizon = c.horizon;
      jp.seed = c.seed;
      log << "prelimit: N=" << n << " horizon=" << c.horizon << '\n';
      auto trace = open_output(name("prelimit_trace", ".csv"), result);
      const auto report = steady_state_compare(jp, diffusion, c.warmup, &trace, c.sample_interval);

      Json rows = Json::array();
      for (const auto& row : report.rows) {
        rows.push_back({{"level", row.level},
                        {"finite_n", estimate_json(row.finite_n)},
                        {"diffusion", estimate_json(row.diffusion)},
                        {"abs_diff", row.abs_diff},
                        {"ratio", row.ratio},
                        {"combined_se", row.combined_se}});
        if (row.level == 2.0) discrepancy.emplace_back(n, row.abs_diff);
      }
      const std::string tag = "_n" + std::to_string(n);
      Checks local;
      local.add("mean_bar_q3_small" + tag, report.mean_bar_q3.value <= 0.1);
      for (const auto& row : report.rows) {
        if (row.level == 2.0) local.add("q2_tail_ratio" + tag, in_bracket(row.ratio, 0.5, 2.0));
      }
      Json s = summary_head(c);
      s["beta"] = beta;
      s["n"] = n;
      s["seed"] = c.seed;
      s["arrival_rate"] = jp.arrival_rate();
      s["rows"] = rows;
      s["mean_bar_q3"] = estimate_json(report.mean_bar_q3);
      s["mean_bar_q1"] = estimate_json(report.mean_bar_q1);
      s["diffusion_cycles"] = run.cycles.size();
      s["checks"] = local.flags;
      s["pass"] = local.all;
      write_json(name("prelimit_summary", ".json"), s, result);
      for (auto& [k, v] : local.flags.items()) checks.add(k, v.get<bool>());
    }
    if (discrepancy.size() > 1) {
      std::sort(discrepancy.begin(), discrepancy.end());
      bool shrinking = true;
      for (std::size_t i = 1; i < discrepancy.size(); ++i) {
        shrinking = shrinking && discrepancy[i].second < discrepancy[i - 1].second;
      }
      Json s = summary_head(c);
      s["beta"] = beta;
      Json rows = Json::array();
      for (const auto& [n, d] : discrepancy) rows.push_back({{"n", n}, {"abs_diff_at_2", d}});
      s["discrepancy"] = rows;
      s["checks"] = Json{{"discrepancy_decreasing_in_n", shrinking}};
      s["pass"] = shrinking;
      write_json(Naming{beta_suffix(c, beta), c.output_dir}("prelimit_convergence", ".json"), s,
                 result);
      checks.add("discrepancy_decreasing_in_n", shrinking);
    }
    all = all && checks.all;
  }
  return all;
}

// ---------------------------------------------------------------- mmn

bool run_mmn(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  bool all = true;
  for (double beta : c.beta) {
    const Naming name{beta_suffix(c, beta), c.output_dir};
    MmnParams p;
    p.beta = beta;
    p.dt = c.dt;
    p.horizon = c.horizon;
    p.seed = c.seed;
    log << "mmn: beta=" << beta << " horizon=" << c.horizon << '\n';
    const auto r = mmn_tail_compare(p);

    auto os = open_output(name("mmn_tails", ".csv"), result);
    csv::write_row(os, {"side", "level", "mmn_prob", "mmn_std_err", "exact", "jsq_prob",
                        "jsq_std_err"});
    for (std::size_t i = 0; i < r.upper_tail_sim.size(); ++i) {
      const auto& s = r.upper_tail_sim[i];
      const auto& q = r.jsq_upper_tail[i];
      csv::write_row(os, {"upper", csv::number(s.level), csv::number(s.prob),
                          csv::number(s.std_err), csv::number(r.upper_tail_exact[i]),
                          csv::number(q.prob), csv::number(q.std_err)});
    }
    for (std::size_t i = 0; i < r.lower_tail_sim.size(); ++i) {
      const auto& s = r.lower_tail_sim[i];
      const auto& q = r.jsq_lower_tail[i];
      csv::write_row(os, {"lower", csv::number(s.level), csv::number(s.prob),
                          csv::number(s.std_err), csv::number(r.lower_tail_exact[i]),
                          csv::number(q.prob), csv::number(q.std_err)});
    }

    Checks checks;
    const double z = std::abs(r.p_positive_sim.value - r.p_positive_exact);
    checks.add("p_positive_within_3se", z <= 3.0 * r.p_positive_sim.std_err);
    checks.add("upper_slope_within_10pct", std::abs(-r.upper_fit.slope - beta) <= 0.1 * beta);
    checks.add("lower_quadratic_within_15pct",
               std::abs(-r.lower_density_fit.quadratic - 0.5) <= 0.15 * 0.5);
    checks.add("jsq_q2_stays_positive", r.jsq_q2_min > 0.0);
    checks.add("mmn_crosses_zero", r.mmn_crossed_zero);

    Json j = summary_head(c);
    j["beta"] = beta;
    j["seed"] = c.seed;
    j["p_positive"] = {{"sim", estimate_json(r.p_positive_sim)}, {"exact", r.p_positive_exact}};
    j["upper_fit"] = fit_json(r.upper_fit);
    j["lower_density_fit"] = {{"quadratic", r.lower_density_fit.quadratic},
                              {"linear", r.lower_density_fit.linear},
                              {"intercept", r.lower_density_fit.intercept},
                              {"r_squared", r.lower_density_fit.r_squared},
                              {"range",
                               {r.lower_density_fit.range.first, r.lower_density_fit.range.second}}};
    j["lower_tail_fit_x_squared"] = fit_json(r.lower_fit_pure);
    j["jsq_q2_min"] = r.jsq_q2_min;
    j["mmn_path_min"] = r.mmn_path_min;
    j["checks"] = checks.flags;
    j["pass"] = checks.all;
    write_json(name("mmn_summary", ".json"), j, result);
    all = all && checks.all;
  }
  return all;
}

// ---------------------------------------------------------------- validate

bool run_validate(const ExperimentConfig& c, RunResult& result, std::ostream& log) {
  Json j = summary_head(c);
  Checks checks;
  Json per_beta = Json::array();
  for (double beta : c.beta) {
    const auto p = diffusion_params(c, beta);
    const double B = c.regen_level(beta);

    log << "validate: beta=" << beta << " hitting oracle, " << c.paths << " paths\n";
    BmHitMcOptions mc;
    mc.paths = c.paths;
    mc.dt = c.dt;
    mc.seed = c.seed;
    const auto oracle = check_bm_hit_oracle(beta, mc);

    const auto steps = steps_for_horizon(c.horizon, c.dt);
    log << "validate: reflection invariants, " << steps << " steps\n";
    const auto inv = audit_reflection(p, steps);

    log << "validate: regeneration invariant, " << c.cycles << " cycles\n";
    const auto reg = audit_regeneration(p, B, c.cycles, c.max_horizon);

    const std::string tag = c.beta.size() > 1 ? "_beta" + fmt_g(beta) : "";
    checks.add("bm_oracle_within_3se" + tag, oracle.pass);
    checks.add("reflection_invariants" + tag, inv.pass);
    checks.add("regeneration_invariant" + tag, reg.pass);
    per_beta.push_back(
        {{"beta", beta},
         {"B", B},
         {"bm_oracle",
          {{"closed_form", oracle.closed_form},
           {"mc", estimate_json(oracle.mc)},
           {"z_score", oracle.z_score}}},
         {"reflection",
          {{"steps", inv.steps},
           {"violations", inv.violations},
           {"worst_identity_ratio", inv.worst_identity_ratio}}},
         {"regeneration",
          {{"cycles", reg.cycles},
           {"tolerance", reg.tolerance},
           {"max_abs_q1", reg.max_abs_q1},
           {"violations", reg.violations}}}});
  }

  // N = 1 JSQ is M/M/1 with load 1 - beta; its busy fraction is exact.
  const double mm1_beta = 0.5;
  JsqParams jp;
  jp.n_servers = 1;
  jp.beta = mm1_beta;
  jp.horizon = std::max(c.horizon, 1e4);
  jp.seed = c.seed;
  log << "validate: M/M/1 busy fraction\n";
  JsqTimeAverager avg(1, c.warmup, {}, (jp.horizon - std::min(c.warmup, jp.horizon / 2)) / 100.0);
  JsqObserver* obs[] = {&avg};
  simulate_jsq(jp, obs);
  const auto busy = avg.all_busy_fraction();
  checks.add("mm1_busy_fraction_within_3se",
             std::abs(busy.value - (1.0 - mm1_beta)) <= 3.0 * busy.std_err);

  j["seed"] = c.seed;
  j["suites"] = per_beta;
  j["mm1"] = {{"beta", mm1_beta}, {"exact", 1.0 - mm1_beta}, {"sim", estimate_json(busy)}};
  j["checks"] = checks.flags;
  j["pass"] = checks.all;
  write_json(fs::path(c.output_dir) / "validate_summary.json", j, result);
  return checks.all;
}

}  // namespace

const char* to_string(Experiment e) {
  for (const auto& [name, value] : kExperiments) {
    if (value == e) return name;
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (const auto& [n, value] : kExperiments) {
    if (name == n) return value;
  }
  throw ConfigError("experiment: unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (beta.empty()) throw ConfigError("beta: at least one value required");
  for (double b : beta) {
    if (!positive(b)) throw ConfigError("beta: must be positive, got " + fmt_g(b));
  }
  if (!positive(dt)) throw ConfigError("dt: must be positive");
  if (!positive(horizon)) throw ConfigError("horizon: must be positive");
  if (horizon < dt) throw ConfigError("horizon: must be at least dt");
  if (cycles == 0) throw ConfigError("cycles: must be positive");
  if (replicas == 0) throw ConfigError("replicas: must be positive");
  if (workers == 0) throw ConfigError("workers: must be positive");
  if (B && !positive(*B)) throw ConfigError("B: must be positive");
  if (!strictly_increasing(q1_levels)) throw ConfigError("q1_levels: must be strictly increasing");
  if (!strictly_increasing(q2_levels)) throw ConfigError("q2_levels: must be strictly increasing");
  for (double x : q1_levels) {
    if (!std::isfinite(x) || x < 0.0) throw ConfigError("q1_levels: depths must be >= 0");
  }
  for (double y : q2_levels) {
    if (!std::isfinite(y) || y < 0.0) throw ConfigError("q2_levels: levels must be >= 0");
  }
  if (n.empty()) throw ConfigError("n: at least one value required");
  for (auto v : n) {
    if (v < 1) throw ConfigError("n: server counts must be >= 1");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if (!positive(sample_interval)) throw ConfigError("sample_interval: must be positive");
  if (!std::isfinite(warmup) || warmup < 0.0) throw ConfigError("warmup: must be >= 0");
  if (paths == 0) throw ConfigError("paths: must be positive");
  if (!positive(max_horizon)) throw ConfigError("max_horizon: must be positive");
  for (const auto& [key, w] : {std::pair{"q1_fit", q1_fit}, std::pair{"q2_fit", q2_fit}}) {
    if (w && !(std::isfinite(w->first) && std::isfinite(w->second) && w->first < w->second)) {
      throw ConfigError(std::string(key) + ": window must satisfy lo < hi");
    }
  }
}

double ExperimentConfig::regen_level(double b) const { return B ? *B : default_regen_level(b); }

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ConfigError(key + ": unknown config key");
    }
    try {
      if (key == "experiment") c.experiment = experiment_from_string(v.get<std::string>());
      else if (key == "beta") c.beta = scalar_or_list<double>(v);
      else if (key == "dt") c.dt = v.get<double>();
      else if (key == "horizon") c.horizon = v.get<double>();
      else if (key == "cycles") c.cycles = non_negative_integer(v);
      else if (key == "replicas") c.replicas = non_negative_integer(v);
      else if (key == "seed") c.seed = non_negative_integer(v);
      else if (key == "B") c.B = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "workers") c.workers = non_negative_integer(v);
      else if (key == "q1_levels") c.q1_levels = v.get<std::vector<double>>();
      else if (key == "q2_levels") c.q2_levels = v.get<std::vector<double>>();
      else if (key == "n") {
        c.n.clear();
        for (const auto& x : v.is_array() ? v : Json::array({v})) {
          c.n.push_back(static_cast<std::int64_t>(non_negative_integer(x)));
        }
      }
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "sample_interval") c.sample_interval = v.get<double>();
      else if (key == "warmup") c.warmup = v.get<double>();
      else if (key == "paths") c.paths = non_negative_integer(v);
      else if (key == "max_horizon") c.max_horizon = v.get<double>();
      else if (key == "q1_fit") c.q1_fit = v.is_null() ? std::nullopt : std::optional(window_from(v));
      else if (key == "q2_fit") c.q2_fit = v.is_null() ? std::nullopt : std::optional(window_from(v));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key + ": invalid value (" + e.what() + ")");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(key + ":", 0) == 0) throw;
      throw ConfigError(key + ": " + msg);
    }
  }
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = to_string(c.experiment);
  j["beta"] = c.beta;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["cycles"] = c.cycles;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  Json b = Json::array();
  for (double beta : c.beta) b.push_back(c.regen_level(beta));
  j["B"] = c.B ? Json(*c.B) : Json(nullptr);
  j["B_resolved"] = b;
  j["workers"] = c.workers;
  j["q1_levels"] = c.q1_levels;
  j["q2_levels"] = c.q2_levels;
  j["n"] = c.n;
  j["output_dir"] = c.output_dir;
  j["sample_interval"] = c.sample_interval;
  j["warmup"] = c.warmup;
  j["paths"] = c.paths;
  j["max_horizon"] = c.max_horizon;
  j["q1_fit"] = c.q1_fit ? Json{c.q1_fit->first, c.q1_fit->second} : Json(nullptr);
  j["q2_fit"] = c.q2_fit ? Json{c.q2_fit->first, c.q2_fit->second} : Json(nullptr);
  return j;
}

Json read_config_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) {
    return Json::object();
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
}

ExperimentConfig load_config(const fs::path& path) { return config_from_json(read_config_file(path)); }

ExperimentConfig resolve_config(Json file, const Json& flags, const char* env_output_dir) {
  if (!file.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (env_output_dir && *env_output_dir) file["output_dir"] = env_output_dir;
  for (const auto& [key, v] : flags.items()) file[key] = v;
  return config_from_json(file);
}

RunResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  fs::create_directories(config.output_dir);
  RunResult result;
  switch (config.experiment) {
    case Experiment::tails: result.pass = run_tails(config, result, log); break;
    case Experiment::extrema: result.pass = run_extrema(config, result, log); break;
    case Experiment::hitting: result.pass = run_hitting(config, result, log); break;
    case Experiment::prelimit: result.pass = run_prelimit(config, result, log); break;
    case Experiment::mmn: result.pass = run_mmn(config, result, log); break;
    case Experiment::validate: result.pass = run_validate(config, result, log); break;
  }
  return result;
}

}  // namespace jsqdiff
