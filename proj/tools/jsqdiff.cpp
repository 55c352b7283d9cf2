// jsqdiff: run one experiment family and write CSV data plus a summary JSON.
//
//   jsqdiff tails --beta 1 --cycles 20000
//   jsqdiff prelimit --n 100 400 --beta 1
//   jsqdiff validate --config run.json
//
// Exit status: 0 all checks pass, 1 some check failed, 2 usage or config
// error, 3 I/O error, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/experiment.hpp"

namespace {

using Json = nlohmann::ordered_json;

struct Flags {
  std::string config;
  std::vector<double> beta;
  std::optional<double> dt, horizon, B, sample_interval, warmup, max_horizon;
  std::optional<std::size_t> cycles, replicas, workers, paths;
  std::optional<std::uint64_t> seed;
  std::vector<double> q1_levels, q2_levels, q1_fit, q2_fit;
  std::vector<std::int64_t> n;
  std::optional<std::string> output_dir;

  Json to_json(const std::string& experiment) const {
    Json j;
    j["experiment"] = experiment;
    if (!beta.empty()) j["beta"] = beta;
    if (dt) j["dt"] = *dt;
    if (horizon) j["horizon"] = *horizon;
    if (cycles) j["cycles"] = *cycles;
    if (replicas) j["replicas"] = *replicas;
    if (seed) j["seed"] = *seed;
    if (B) j["B"] = *B;
    if (workers) j["workers"] = *workers;
    if (!q1_levels.empty()) j["q1_levels"] = q1_levels;
    if (!q2_levels.empty()) j["q2_levels"] = q2_levels;
    if (!n.empty()) j["n"] = n;
    if (output_dir) j["output_dir"] = *output_dir;
    if (sample_interval) j["sample_interval"] = *sample_interval;
    if (warmup) j["warmup"] = *warmup;
    if (paths) j["paths"] = *paths;
    if (max_horizon) j["max_horizon"] = *max_horizon;
    if (!q1_fit.empty()) j["q1_fit"] = q1_fit;
    if (!q2_fit.empty()) j["q2_fit"] = q2_fit;
    return j;
  }
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "flat JSON config file");
  sub->add_option("--beta", f.beta, "one or more beta values");
  sub->add_option("--dt", f.dt, "Euler step");
  sub->add_option("--horizon", f.horizon, "simulated time");
  sub->add_option("--cycles", f.cycles, "regeneration cycles, split over replicas");
  sub->add_option("--replicas", f.replicas, "independent streams");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--B", f.B, "regeneration level");
  sub->add_option("--workers", f.workers, "worker threads");
  sub->add_option("--q1-levels", f.q1_levels, "Q1 depths x for pi(Q1 < -x)");
  sub->add_option("--q2-levels", f.q2_levels, "Q2 levels y for pi(Q2 > y)");
  sub->add_option("--n", f.n, "server counts for prelimit");
  sub->add_option("--output-dir", f.output_dir, "output directory");
  sub->add_option("--sample-interval", f.sample_interval, "trace sampling interval");
  sub->add_option("--warmup", f.warmup, "discarded prelimit warmup");
  sub->add_option("--paths", f.paths, "Monte Carlo paths for the hitting oracle");
  sub->add_option("--max-horizon", f.max_horizon, "cap on simulated time per replica");
  sub->add_option("--q1-fit", f.q1_fit, "Q1 fit window lo hi")->expected(2);
  sub->add_option("--q2-fit", f.q2_fit, "Q2 fit window lo hi")->expected(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JSQ diffusion experiments"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"tails", "extrema", "hitting", "prelimit", "mmn", "validate"}) {
    add_common(app.add_subcommand(name, std::string(name) + " experiment"), flags);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string experiment = app.get_subcommands().front()->get_name();

  try {
    Json file = flags.config.empty() ? Json::object() : jsqdiff::read_config_file(flags.config);
    const auto config = jsqdiff::resolve_config(std::move(file), flags.to_json(experiment),
                                                std::getenv(jsqdiff::kOutputDirEnv));
    const auto result = jsqdiff::run_experiment(config, std::cerr);
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    std::cout << (result.pass ? "PASS" : "FAIL") << '\n';
    return result.pass ? 0 : 1;
  } catch (const jsqdiff::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
