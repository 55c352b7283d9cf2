#pragma once

// Regenerative structure of the JSQ diffusion.
//
// With a level B > 0, alpha_{2k+1} is the first time after alpha_{2k} that Q2
// falls to B and alpha_{2k+2} the first time after that Q2 climbs back to 2B.
// At every alpha_{2k+2} the process sits at (0, 2B), so the segments between
// consecutive Xi_k = alpha_{2k+2} are i.i.d. cycles. Stationary probabilities
// are ratios of expected per-cycle occupation time to expected cycle length.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "jsqdiff/sde.hpp"
#include "jsqdiff/stats.hpp"

namespace jsqdiff {

struct PathPoint {
  double t = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
};

inline PathPoint to_point(const DiffusionState& s) noexcept { return {s.t, s.q1, s.q2}; }

// max(beta, 1/beta, log(1/beta)/beta)
double l0(double beta);
// max(1, l0(beta)) for beta <= 1, 1/beta above.
double default_regen_level(double beta);

// Levels at which per-cycle occupation times are recorded.
// q1_depths x index events {Q1 < -x}; q2_levels y index events {Q2 > y}.
struct LevelGrid {
  std::vector<double> q1_depths;
  std::vector<double> q2_levels;

  void validate() const;
  // Depths 0.25..5 and levels 0..2B+10, both in steps of 0.25.
  static LevelGrid standard(double regen_level);
};

struct RegenConfig {
  double B = 1.0;
  std::size_t max_cycles = 1'000'000;
  // |Q1| allowed at interpolated regeneration instants; 5 sqrt(dt) is typical.
  double tolerance_q1 = 5.0 * 0.031622776601683794;
  LevelGrid grid;
  // Accept a start away from (0, 2B); the delay up to Xi_0 is discarded.
  bool allow_delayed_start = false;

  void validate() const;
  static RegenConfig for_params(const DiffusionParams& params, double B);
};

struct Cycle {
  double start_t = 0.0;
  double end_t = 0.0;
  double down_t = 0.0;  // interpolated alpha_{2k+1} inside the cycle
  // Sum of the step pieces inside the cycle; equals end_t - start_t up to rounding.
  double duration = 0.0;
  std::vector<double> occ_q1;  // time with Q1 < -q1_depths[j]
  std::vector<double> occ_q2;  // time with Q2 > q2_levels[j]
  double min_q1 = 0.0;
  double max_q2 = 0.0;
  double q1_at_start = 0.0;
  double q1_at_end = 0.0;
  std::shared_ptr<const LevelGrid> grid;
};

struct EventQuery {
  enum class Kind { whole_space, q1_below, q2_above };
  Kind kind = Kind::whole_space;
  double level = 0.0;

  static EventQuery whole() { return {}; }
  static EventQuery q1_below(double depth) { return {Kind::q1_below, depth}; }
  static EventQuery q2_above(double y) { return {Kind::q2_above, y}; }
};

// Occupation time of the event in one cycle. The level must be on the
// cycle's grid (ConfigError otherwise).
double occupation(const Cycle& cycle, const EventQuery& event);

// Scans a discrete path for regeneration instants, interpolating linearly
// between samples, and emits one Cycle per [Xi_k, Xi_{k+1}).
// Occupation integrals use the left-endpoint rule: the piece of a step before
// an interpolated event goes to the closing cycle, the rest to the next one.
class CycleDetector {
 public:
  explicit CycleDetector(RegenConfig config);

  // Throws ConfigError when p0 is not (0, 2B) and delayed starts are off.
  void start(const PathPoint& p0);
  void push(const PathPoint& prev, const PathPoint& next);

  bool started() const noexcept { return started_; }
  bool done() const noexcept { return cycles_.size() >= config_.max_cycles; }
  const std::vector<Cycle>& cycles() const noexcept { return cycles_; }
  std::vector<Cycle> take_cycles() { return std::move(cycles_); }
  const RegenConfig& config() const noexcept { return config_; }

  // Delay segment from a non-regeneration start, [0, Xi_0). Zero otherwise.
  double delay_length() const noexcept { return delay_length_; }
  // Largest |Q1| seen at any interpolated up-crossing of 2B.
  double max_abs_q1_at_regen() const noexcept { return max_abs_q1_at_regen_; }
  std::size_t regen_tolerance_violations() const noexcept { return violations_; }

 private:
  enum class Phase { seeking_down, seeking_up };

  void open_cycle(double t, double q1);
  void credit(const PathPoint& left, double duration);
  void close_cycle(double t, double q1);

  RegenConfig config_;
  std::shared_ptr<const LevelGrid> grid_;
  bool started_ = false;
  bool in_delay_ = false;
  double delay_length_ = 0.0;
  Phase phase_ = Phase::seeking_down;

  Cycle current_;
  std::vector<double> bins_q1_;
  std::vector<double> bins_q2_;
  std::vector<Cycle> cycles_;

  double max_abs_q1_at_regen_ = 0.0;
  std::size_t violations_ = 0;
};

class CycleObserver : public PathObserver {
 public:
  explicit CycleObserver(RegenConfig config) : detector_(std::move(config)) {}

  void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) override;
  bool done() const override { return detector_.done(); }

  CycleDetector& detector() noexcept { return detector_; }
  const CycleDetector& detector() const noexcept { return detector_; }

 private:
  CycleDetector detector_;
};

std::vector<Cycle> detect_cycles(std::span<const PathPoint> path, const RegenConfig& config);

// Runs one path from (0, 2B) on the given stream until max_cycles cycles
// complete or max_horizon elapses.
std::vector<Cycle> simulate_cycles(const DiffusionParams& params, const RegenConfig& config,
                                   double max_horizon, std::uint64_t stream = 0);

// Sums for the ratio-of-means estimator; merge is associative and commutative.
class RatioAccumulator {
 public:
  void add(double numerator, double denominator) noexcept;
  void merge(const RatioAccumulator& other) noexcept;
  std::size_t count() const noexcept { return n_; }
  // Delta-method SE. Throws InsufficientDataError for n < 2.
  ProbEstimate estimate() const;

 private:
  std::size_t n_ = 0;
  double sy_ = 0.0, st_ = 0.0, syy_ = 0.0, stt_ = 0.0, syt_ = 0.0;
};

// (mean occupation) / (mean duration) over i.i.d. cycles, delta-method SE.
// Two-pass evaluation; throws InsufficientDataError for fewer than 2 cycles.
ProbEstimate regenerative_estimate(std::span<const Cycle> cycles, const EventQuery& event);

using StateFunctional = std::function<double(const PathPoint&)>;

// (1/t) * integral of f over the path, left-endpoint rule, batch-means SE.
class ErgodicAverager : public PathObserver {
 public:
  ErgodicAverager(StateFunctional f, double batch_length);

  void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) override;
  void push(const PathPoint& prev, const PathPoint& next);

  double value() const noexcept { return batches_.mean(); }
  ProbEstimate estimate() const { return batches_.estimate(); }

 private:
  StateFunctional f_;
  BatchMeans batches_;
};

double ergodic_average(std::span<const PathPoint> path, const StateFunctional& f);

struct CycleDiagnostics {
  std::size_t n = 0;
  double mean_duration = 0.0;
  double mean_duration_se = 0.0;
  double duration_variance = 0.0;
  double lag1_autocorrelation = 0.0;
  // (t, empirical P(duration > t)) on a log-spaced grid
  std::vector<std::pair<double, double>> duration_tail;
};

// Requires at least 30 cycles.
CycleDiagnostics cycle_diagnostics(std::span<const Cycle> cycles);

void write_cycles_csv(std::ostream& os, std::span<const Cycle> cycles);

}  // namespace jsqdiff
