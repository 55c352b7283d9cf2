#include "jsqdiff/regen.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "jsqdiff/csv.hpp"
#include "jsqdiff/errors.hpp"

namespace jsqdiff {

namespace {

void check_strictly_increasing(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw ConfigError(std::string(name) + " contains a non-finite level");
    if (i > 0 && !(v[i] > v[i - 1])) {
      throw ConfigError(std::string(name) + " must be strictly increasing");
    }
  }
}

std::size_t find_level(const std::vector<double>& levels, double level, const char* name) {
  const auto it = std::lower_bound(levels.begin(), levels.end(), level - 1e-12);
  if (it == levels.end() || std::abs(*it - level) > 1e-12) {
    throw ConfigError(std::string("level ") + csv::number(level) + " is not on the " + name +
                      " grid");
  }
  return static_cast<std::size_t>(it - levels.begin());
}

// Sum after sorting, so the result depends only on the multiset of values.
double canonical_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double l0(double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  return std::max({beta, 1.0 / beta, std::log(1.0 / beta) / beta});
}

double default_regen_level(double beta) {
  // Above beta = 1, Q2 lives on scale 1/beta and a level of l0(beta) = beta is
  // reached so rarely that cycles become impractically long.
  return beta <= 1.0 ? std::max(1.0, l0(beta)) : 1.0 / beta;
}

void LevelGrid::validate() const {
  check_strictly_increasing(q1_depths, "q1_depths");
  check_strictly_increasing(q2_levels, "q2_levels");
}

LevelGrid LevelGrid::standard(double regen_level) {
  LevelGrid grid;
  for (int i = 1; i <= 20; ++i) grid.q1_depths.push_back(0.25 * i);
  const int top = static_cast<int>(std::ceil((2.0 * regen_level + 10.0) / 0.25));
  for (int i = 0; i <= top; ++i) grid.q2_levels.push_back(0.25 * i);
  return grid;
}

void RegenConfig::validate() const {
  if (!(B > 0.0) || !std::isfinite(B)) throw ConfigError("B must be positive");
  if (max_cycles < 1) throw ConfigError("max_cycles must be >= 1");
  if (!(tolerance_q1 > 0.0)) throw ConfigError("tolerance_q1 must be positive");
  grid.validate();
}

RegenConfig RegenConfig::for_params(const DiffusionParams& params, double B) {
  RegenConfig config;
  config.B = B;
  config.tolerance_q1 = 5.0 * std::sqrt(params.dt);
  config.grid = LevelGrid::standard(B);
  return config;
}

double occupation(const Cycle& cycle, const EventQuery& event) {
  switch (event.kind) {
    case EventQuery::Kind::whole_space:
      return cycle.duration;
    case EventQuery::Kind::q1_below:
      return cycle.occ_q1[find_level(cycle.grid->q1_depths, event.level, "q1_depths")];
    case EventQuery::Kind::q2_above:
      return cycle.occ_q2[find_level(cycle.grid->q2_levels, event.level, "q2_levels")];
  }
  return 0.0;
}

CycleDetector::CycleDetector(RegenConfig config)
    : config_(std::move(config)),
      grid_(std::make_shared<const LevelGrid>(config_.grid)) {
  config_.validate();
}

void CycleDetector::start(const PathPoint& p0) {
  const double two_b = 2.0 * config_.B;
  const bool at_regen = std::abs(p0.q1) <= config_.tolerance_q1 &&
                        std::abs(p0.q2 - two_b) <= 1e-9 * std::max(1.0, two_b);
  if (at_regen) {
    open_cycle(p0.t, p0.q1);
  } else if (config_.allow_delayed_start) {
    in_delay_ = true;
  } else {
    throw ConfigError("path must start at the regeneration state (0, 2B)");
  }
  phase_ = Phase::seeking_down;
  started_ = true;
}

void CycleDetector::open_cycle(double t, double q1) {
  current_ = Cycle{};
  current_.start_t = t;
  current_.q1_at_start = q1;
  current_.min_q1 = q1;
  current_.max_q2 = 2.0 * config_.B;
  current_.grid = grid_;
  bins_q1_.assign(grid_->q1_depths.size() + 1, 0.0);
  bins_q2_.assign(grid_->q2_levels.size() + 1, 0.0);
}

void CycleDetector::credit(const PathPoint& left, double duration) {
  if (in_delay_ || duration <= 0.0) return;
  const auto& depths = grid_->q1_depths;
  const auto& levels = grid_->q2_levels;
  const auto k1 = std::lower_bound(depths.begin(), depths.end(), -left.q1) - depths.begin();
  const auto k2 = std::lower_bound(levels.begin(), levels.end(), left.q2) - levels.begin();
  bins_q1_[static_cast<std::size_t>(k1)] += duration;
  bins_q2_[static_cast<std::size_t>(k2)] += duration;
  current_.duration += duration;
}

void CycleDetector::close_cycle(double t, double q1) {
  const double abs_q1 = std::abs(q1);
  max_abs_q1_at_regen_ = std::max(max_abs_q1_at_regen_, abs_q1);
  if (abs_q1 > config_.tolerance_q1) ++violations_;

  if (in_delay_) {
    in_delay_ = false;
    delay_length_ = t;
    return;
  }
  current_.end_t = t;
  current_.q1_at_end = q1;
  current_.min_q1 = std::min(current_.min_q1, q1);
  // events {level < value} correspond to bins above the level's index
  auto suffix = [](const std::vector<double>& bins, std::vector<double>& occ) {
    occ.assign(bins.size() - 1, 0.0);
    double acc = bins.back();
    for (std::size_t j = occ.size(); j-- > 0;) {
      occ[j] = acc;
      acc += bins[j];
    }
  };
  suffix(bins_q1_, current_.occ_q1);
  suffix(bins_q2_, current_.occ_q2);
  cycles_.push_back(std::move(current_));
}

void CycleDetector::push(const PathPoint& prev, const PathPoint& next) {
  if (!started_) start(prev);
  if (done()) return;

  const double two_b = 2.0 * config_.B;
  const double dt = next.t - prev.t;

  if (phase_ == Phase::seeking_down) {
    double theta = -1.0;
    if (prev.q2 <= config_.B) {
      theta = 0.0;
    } else if (next.q2 <= config_.B) {
      theta = (prev.q2 - config_.B) / (prev.q2 - next.q2);
    }
    credit(prev, dt);
    if (theta >= 0.0) {
      current_.down_t = prev.t + theta * dt;
      phase_ = Phase::seeking_up;
    }
  } else if (next.q2 >= two_b) {
    const double theta = prev.q2 >= two_b ? 0.0 : (two_b - prev.q2) / (next.q2 - prev.q2);
    const double tc = prev.t + theta * dt;
    const double q1c = prev.q1 + theta * (next.q1 - prev.q1);
    credit(prev, theta * dt);
    close_cycle(tc, q1c);
    phase_ = Phase::seeking_down;
    if (done()) return;
    open_cycle(tc, q1c);
    credit(prev, (1.0 - theta) * dt);
  } else {
    credit(prev, dt);
  }

  if (!in_delay_) {
    current_.min_q1 = std::min(current_.min_q1, next.q1);
    current_.max_q2 = std::max(current_.max_q2, next.q2);
  }
}

void CycleObserver::on_step(const DiffusionState& prev, const DiffusionState& next, double) {
  detector_.push(to_point(prev), to_point(next));
}

std::vector<Cycle> detect_cycles(std::span<const PathPoint> path, const RegenConfig& config) {
  CycleDetector detector(config);
  if (path.empty()) return {};
  detector.start(path.front());
  for (std::size_t i = 1; i < path.size() && !detector.done(); ++i) {
    detector.push(path[i - 1], path[i]);
  }
  return detector.take_cycles();
}

std::vector<Cycle> simulate_cycles(const DiffusionParams& params, const RegenConfig& config,
                                   double max_horizon, std::uint64_t stream) {
  DiffusionParams p = params;
  p.q1_init = 0.0;
  p.q2_init = 2.0 * config.B;
  DiffusionPath path(p, stream);
  CycleObserver observer(config);
  observer.detector().start(to_point(path.state()));
  PathObserver* observers[] = {&observer};
  path.run(steps_for_horizon(max_horizon, p.dt), observers);
  return observer.detector().take_cycles();
}

void RatioAccumulator::add(double numerator, double denominator) noexcept {
  ++n_;
  sy_ += numerator;
  st_ += denominator;
  syy_ += numerator * numerator;
  stt_ += denominator * denominator;
  syt_ += numerator * denominator;
}

void RatioAccumulator::merge(const RatioAccumulator& other) noexcept {
  n_ += other.n_;
  sy_ += other.sy_;
  st_ += other.st_;
  syy_ += other.syy_;
  stt_ += other.stt_;
  syt_ += other.syt_;
}

ProbEstimate RatioAccumulator::estimate() const {
  if (n_ < 2) throw InsufficientDataError("ratio estimate needs at least 2 cycles");
  const double n = static_cast<double>(n_);
  const double r = sy_ / st_;
  const double var_z = std::max(0.0, (syy_ - 2.0 * r * syt_ + r * r * stt_) / (n - 1.0));
  return {r, std::sqrt(var_z / n) / (st_ / n), n_};
}

ProbEstimate regenerative_estimate(std::span<const Cycle> cycles, const EventQuery& event) {
  if (cycles.size() < 2) throw InsufficientDataError("regenerative estimate needs >= 2 cycles");
  std::vector<double> occ(cycles.size()), dur(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    occ[i] = occupation(cycles[i], event);
    dur[i] = cycles[i].duration;
  }
  const double n = static_cast<double>(cycles.size());
  const double sum_occ = canonical_sum(occ);
  const double sum_dur = canonical_sum(dur);
  const double ratio = sum_occ / sum_dur;

  std::vector<double> z2(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const double z = occ[i] - ratio * dur[i];
    z2[i] = z * z;
  }
  const double var_z = canonical_sum(std::move(z2)) / (n - 1.0);
  return {ratio, std::sqrt(var_z / n) / (sum_dur / n), cycles.size()};
}

ErgodicAverager::ErgodicAverager(StateFunctional f, double batch_length)
    : f_(std::move(f)), batches_(batch_length) {}

void ErgodicAverager::push(const PathPoint& prev, const PathPoint& next) {
  batches_.add(f_(prev), next.t - prev.t);
}

void ErgodicAverager::on_step(const DiffusionState& prev, const DiffusionState& next, double) {
  push(to_point(prev), to_point(next));
}

double ergodic_average(std::span<const PathPoint> path, const StateFunctional& f) {
  if (path.size() < 2) throw InsufficientDataError("ergodic average needs at least one step");
  double integral = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    integral += f(path[i - 1]) * (path[i].t - path[i - 1].t);
  }
  return integral / (path.back().t - path.front().t);
}

CycleDiagnostics cycle_diagnostics(std::span<const Cycle> cycles) {
  if (cycles.size() < 30) throw InsufficientDataError("cycle diagnostics need >= 30 cycles");
  CycleDiagnostics d;
  d.n = cycles.size();
  RunningStats stats;
  std::vector<double> dur;
  dur.reserve(cycles.size());
  for (const auto& c : cycles) {
    stats.add(c.duration);
    dur.push_back(c.duration);
  }
  d.mean_duration = stats.mean();
  d.mean_duration_se = stats.std_err();
  d.duration_variance = stats.variance();

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dur.size(); ++i) {
    const double a = dur[i] - d.mean_duration;
    den += a * a;
    if (i + 1 < dur.size()) num += a * (dur[i + 1] - d.mean_duration);
  }
  d.lag1_autocorrelation = den > 0.0 ? num / den : 0.0;

  std::sort(dur.begin(), dur.end());
  const double lo = d.mean_duration / 8.0;
  const double hi = dur.back();
  constexpr int kPoints = 16;
  for (int k = 0; k < kPoints; ++k) {
    const double t = lo * std::pow(hi / lo, static_cast<double>(k) / (kPoints - 1));
    const auto above = dur.end() - std::upper_bound(dur.begin(), dur.end(), t);
    d.duration_tail.emplace_back(t, static_cast<double>(above) / static_cast<double>(dur.size()));
  }
  return d;
}

void write_cycles_csv(std::ostream& os, std::span<const Cycle> cycles) {
  os << "cycle,start_t,end_t,duration,min_q1,max_q2,q1_at_start";
  if (!cycles.empty()) {
    for (double x : cycles.front().grid->q1_depths) os << ",occ_q1_below_" << csv::number(-x);
    for (double y : cycles.front().grid->q2_levels) os << ",occ_q2_above_" << csv::number(y);
  }
  os << '\n';
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const auto& c = cycles[i];
    os << i << ',' << csv::number(c.start_t) << ',' << csv::number(c.end_t) << ','
       << csv::number(c.duration) << ',' << csv::number(c.min_q1) << ',' << csv::number(c.max_q2)
       << ',' << csv::number(c.q1_at_start);
    for (double v : c.occ_q1) os << ',' << csv::number(v);
    for (double v : c.occ_q2) os << ',' << csv::number(v);
    os << '\n';
  }
}

}  // namespace jsqdiff
