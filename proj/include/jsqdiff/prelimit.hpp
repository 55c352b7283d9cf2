#pragma once

// Exact event-driven simulation of N unit-rate servers fed by a Poisson(lambda)
// stream under Join-the-Shortest-Queue, with lambda = N - beta sqrt(N).
// The state is the occupancy vector q[i] = #servers with at least i+1 tasks;
// servers with equal queue length are exchangeable, so ties need no server
// identity.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "jsqdiff/stats.hpp"

namespace jsqdiff {

struct JsqParams {
  std::int64_t n_servers = 100;
  double beta = 1.0;
  double horizon = 1e4;
  std::uint64_t seed = 0;

  double arrival_rate() const;
  void validate() const;
};

struct OccupancyState {
  // Trailing zeros are trimmed except q[0], which is always present.
  std::vector<std::int64_t> q{0};
  double t = 0.0;

  std::int64_t at_least(std::size_t i) const noexcept {  // Q_i, i >= 1
    return i - 1 < q.size() ? q[i - 1] : 0;
  }
  std::int64_t total_tasks() const noexcept;
  bool monotone(std::int64_t n_servers) const noexcept;
};

struct ScaledOccupancy {
  double bar_q1 = 0.0;
  double bar_q2 = 0.0;
  double bar_q3 = 0.0;
};

ScaledOccupancy scale_occupancy(const OccupancyState& state, std::int64_t n_servers);

// Smallest m >= 0 such that some server holds exactly m tasks.
std::size_t shortest_queue_length(const OccupancyState& state, std::int64_t n_servers);

// A shortest-queue server gains a task: q[m] += 1.
void apply_arrival(OccupancyState& state, std::int64_t n_servers);
// A server holding exactly j >= 1 tasks completes one: q[j-1] -= 1.
void apply_departure(OccupancyState& state, std::size_t j);

enum class JsqEvent { arrival, departure };

class JsqObserver {
 public:
  virtual ~JsqObserver() = default;
  // The state is constant on [t0, t1).
  virtual void on_hold(const OccupancyState& state, double t0, double t1) = 0;
  virtual void on_event(const OccupancyState& /*after*/, JsqEvent /*kind*/) {}
};

// Runs until params.horizon from `initial` (empty system by default).
OccupancyState simulate_jsq(const JsqParams& params, std::span<JsqObserver* const> observers,
                            OccupancyState initial = {});

// Time averages after a warmup: P(bar_q2 > y) on a level grid, E bar_q3,
// E bar_q1 and the fraction of time with every server busy.
class JsqTimeAverager : public JsqObserver {
 public:
  JsqTimeAverager(std::int64_t n_servers, double warmup, std::vector<double> q2_levels,
                  double batch_length);

  void on_hold(const OccupancyState& state, double t0, double t1) override;

  const std::vector<double>& q2_levels() const noexcept { return levels_; }
  ProbEstimate q2_tail(std::size_t i) const { return tails_[i].estimate(); }
  ProbEstimate mean_bar_q3() const { return q3_.estimate(); }
  ProbEstimate mean_bar_q1() const { return q1_.estimate(); }
  ProbEstimate all_busy_fraction() const { return busy_.estimate(); }

 private:
  std::int64_t n_;
  double warmup_;
  std::vector<double> levels_;
  std::vector<BatchMeans> tails_;
  BatchMeans q3_;
  BatchMeans q1_;
  BatchMeans busy_;
};

// Writes "t,bar_q1,bar_q2,bar_q3" rows at t = k * interval.
class JsqTraceSampler : public JsqObserver {
 public:
  JsqTraceSampler(std::ostream& os, std::int64_t n_servers, double interval);
  void on_hold(const OccupancyState& state, double t0, double t1) override;

 private:
  std::ostream& os_;
  std::int64_t n_;
  double interval_;
  std::uint64_t next_k_ = 0;
};

struct SteadyStateRow {
  double level = 0.0;
  ProbEstimate finite_n;
  ProbEstimate diffusion;
  double abs_diff = 0.0;
  double ratio = 0.0;  // finite_n / diffusion
  double combined_se = 0.0;
};

struct SteadyStateReport {
  std::int64_t n_servers = 0;
  double beta = 0.0;
  double warmup = 0.0;
  double horizon = 0.0;
  std::vector<SteadyStateRow> rows;
  ProbEstimate mean_bar_q3;
  ProbEstimate mean_bar_q1;
};

struct DiffusionTailPoint {
  double level = 0.0;
  ProbEstimate estimate;
};

// Simulates warmup + params.horizon and compares time-average P(bar_q2 > y)
// with diffusion estimates at the same levels. Requires horizon >= 1e4.
SteadyStateReport steady_state_compare(const JsqParams& params,
                                       std::span<const DiffusionTailPoint> diffusion,
                                       double warmup = 1e3, std::ostream* trace = nullptr,
                                       double trace_interval = 1.0);

}  // namespace jsqdiff
