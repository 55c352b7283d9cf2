#pragma once

// Configuration and orchestration for the jsqdiff command-line tool.
//
// The config file is a flat JSON object. Precedence for every key is
// command-line flag > config file > default, except output_dir where the
// JSQDIFF_OUTPUT_DIR environment variable sits between flag and file.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace jsqdiff {

enum class Experiment { tails, extrema, hitting, prelimit, mmn, validate };

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::validate;
  std::vector<double> beta{1.0};
  double dt = 1e-3;
  double horizon = 1e5;
  std::size_t cycles = 20'000;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  std::optional<double> B;  // default_regen_level(beta) when unset
  std::size_t workers = 1;
  std::vector<double> q1_levels;  // empty: standard grid
  std::vector<double> q2_levels;
  std::vector<std::int64_t> n{400};
  std::string output_dir = ".";
  double sample_interval = 1.0;
  double warmup = 1e3;
  std::size_t paths = 100'000;
  double max_horizon = 1e8;  // per replica cap on cycle collection
  std::optional<std::pair<double, double>> q1_fit;  // default [1, 3]
  std::optional<std::pair<double, double>> q2_fit;  // default [2B, 2B + 4/beta]

  // Throws ConfigError naming the offending field.
  void validate() const;
  double regen_level(double beta) const;
};

inline constexpr const char* kOutputDirEnv = "JSQDIFF_OUTPUT_DIR";

// Unknown keys and wrongly typed values are ConfigErrors naming the key.
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& config);

// An empty or whitespace-only file means all defaults.
nlohmann::ordered_json read_config_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

// Merges file values, flag values and the output directory override.
ExperimentConfig resolve_config(nlohmann::ordered_json file, const nlohmann::ordered_json& flags,
                                const char* env_output_dir);

struct RunResult {
  bool pass = false;
  std::vector<std::filesystem::path> files;
};

// Runs the configured experiment, writing its files under output_dir.
// Filesystem failures throw std::filesystem::filesystem_error or
// std::ios_base::failure.
RunResult run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace jsqdiff
