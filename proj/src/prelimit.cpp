#include "jsqdiff/prelimit.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>

#include "jsqdiff/csv.hpp"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/rng.hpp"

namespace jsqdiff {

double JsqParams::arrival_rate() const {
  const double n = static_cast<double>(n_servers);
  return n - beta * std::sqrt(n);
}

void JsqParams::validate() const {
  if (n_servers < 1) throw ConfigError("n_servers must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(arrival_rate() > 0.0)) throw ConfigError("beta * sqrt(N) must be below N (lambda > 0)");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
}

std::int64_t OccupancyState::total_tasks() const noexcept {
  std::int64_t s = 0;
  for (auto v : q) s += v;
  return s;
}

bool OccupancyState::monotone(std::int64_t n_servers) const noexcept {
  if (q.empty() || q[0] > n_servers) return false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < 0 || (i > 0 && q[i] > q[i - 1])) return false;
  }
  return true;
}

ScaledOccupancy scale_occupancy(const OccupancyState& state, std::int64_t n_servers) {
  const double root_n = std::sqrt(static_cast<double>(n_servers));
  return {-static_cast<double>(n_servers - state.at_least(1)) / root_n,
          static_cast<double>(state.at_least(2)) / root_n,
          static_cast<double>(state.at_least(3)) / root_n};
}

std::size_t shortest_queue_length(const OccupancyState& state, std::int64_t n_servers) {
  if (n_servers - state.at_least(1) > 0) return 0;
  std::size_t m = 1;
  while (state.at_least(m) - state.at_least(m + 1) == 0) ++m;
  return m;
}

void apply_arrival(OccupancyState& state, std::int64_t n_servers) {
  const std::size_t m = shortest_queue_length(state, n_servers);
  if (m == state.q.size()) state.q.push_back(0);
  ++state.q[m];
}

void apply_departure(OccupancyState& state, std::size_t j) {
  if (j < 1 || state.at_least(j) - state.at_least(j + 1) <= 0) {
    throw NumericError("departure from an empty queue-length class");
  }
  --state.q[j - 1];
  while (state.q.size() > 1 && state.q.back() == 0) state.q.pop_back();
}

OccupancyState simulate_jsq(const JsqParams& params, std::span<JsqObserver* const> observers,
                            OccupancyState initial) {
  params.validate();
  if (!initial.monotone(params.n_servers)) throw ConfigError("initial occupancy is not monotone");
  RandomStream rng(params.seed, 0);
  const double lambda = params.arrival_rate();
  OccupancyState s = std::move(initial);

  while (true) {
    const double busy = static_cast<double>(s.q[0]);
    const double total_rate = lambda + busy;
    const double next_t = s.t + rng.exponential() / total_rate;
    const double hold_end = std::min(next_t, params.horizon);
    for (auto* obs : observers) obs->on_hold(s, s.t, hold_end);
    if (next_t >= params.horizon) {
      s.t = params.horizon;
      return s;
    }
    s.t = next_t;
    JsqEvent kind;
    if (rng.uniform() * total_rate < lambda) {
      apply_arrival(s, params.n_servers);
      kind = JsqEvent::arrival;
    } else {
      // class j holds q[j-1] - q[j] servers out of q[0] busy ones
      const auto pick = static_cast<std::int64_t>(rng.uniform() * busy);
      std::size_t j = 1;
      std::int64_t cumulative = s.at_least(1) - s.at_least(2);
      while (pick >= cumulative) {
        ++j;
        cumulative += s.at_least(j) - s.at_least(j + 1);
      }
      apply_departure(s, j);
      kind = JsqEvent::departure;
    }
    for (auto* obs : observers) obs->on_event(s, kind);
  }
}

JsqTimeAverager::JsqTimeAverager(std::int64_t n_servers, double warmup,
                                 std::vector<double> q2_levels, double batch_length)
    : n_(n_servers),
      warmup_(warmup),
      levels_(std::move(q2_levels)),
      q3_(batch_length),
      q1_(batch_length),
      busy_(batch_length) {
  tails_.assign(levels_.size(), BatchMeans(batch_length));
}

void JsqTimeAverager::on_hold(const OccupancyState& state, double t0, double t1) {
  if (t1 <= warmup_) return;
  const double duration = t1 - std::max(t0, warmup_);
  const auto scaled = scale_occupancy(state, n_);
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    tails_[i].add(scaled.bar_q2 > levels_[i] ? 1.0 : 0.0, duration);
  }
  q3_.add(scaled.bar_q3, duration);
  q1_.add(scaled.bar_q1, duration);
  busy_.add(state.at_least(1) == n_ ? 1.0 : 0.0, duration);
}

JsqTraceSampler::JsqTraceSampler(std::ostream& os, std::int64_t n_servers, double interval)
    : os_(os), n_(n_servers), interval_(interval) {
  if (!(interval > 0.0)) throw ConfigError("sample interval must be positive");
  os_ << "t,bar_q1,bar_q2,bar_q3\n";
}

void JsqTraceSampler::on_hold(const OccupancyState& state, double t0, double t1) {
  while (static_cast<double>(next_k_) * interval_ < t1) {
    const double t = static_cast<double>(next_k_) * interval_;
    if (t >= t0) {
      const auto s = scale_occupancy(state, n_);
      os_ << csv::number(t) << ',' << csv::number(s.bar_q1) << ',' << csv::number(s.bar_q2) << ','
          << csv::number(s.bar_q3) << '\n';
    }
    ++next_k_;
  }
}

SteadyStateReport steady_state_compare(const JsqParams& params,
                                       std::span<const DiffusionTailPoint> diffusion,
                                       double warmup, std::ostream* trace,
                                       double trace_interval) {
  params.validate();
  if (params.horizon < 1e4) throw InsufficientDataError("steady-state comparison needs horizon >= 1e4");
  if (!(warmup >= 0.0)) throw ConfigError("warmup must be non-negative");

  std::vector<double> levels;
  for (const auto& d : diffusion) levels.push_back(d.level);
  JsqParams run = params;
  run.horizon = warmup + params.horizon;

  // 100 batches over the measurement window
  JsqTimeAverager averager(params.n_servers, warmup, levels, params.horizon / 100.0);
  std::vector<JsqObserver*> observers{&averager};
  std::unique_ptr<JsqTraceSampler> sampler;
  if (trace != nullptr) {
    sampler = std::make_unique<JsqTraceSampler>(*trace, params.n_servers, trace_interval);
    observers.push_back(sampler.get());
  }
  simulate_jsq(run, observers);

  SteadyStateReport report;
  report.n_servers = params.n_servers;
  report.beta = params.beta;
  report.warmup = warmup;
  report.horizon = params.horizon;
  for (std::size_t i = 0; i < diffusion.size(); ++i) {
    SteadyStateRow row;
    row.level = diffusion[i].level;
    row.finite_n = averager.q2_tail(i);
    row.diffusion = diffusion[i].estimate;
    row.abs_diff = std::abs(row.finite_n.value - row.diffusion.value);
    row.ratio = row.diffusion.value > 0.0 ? row.finite_n.value / row.diffusion.value : 0.0;
    row.combined_se = std::hypot(row.finite_n.std_err, row.diffusion.std_err);
    report.rows.push_back(row);
  }
  report.mean_bar_q3 = averager.mean_bar_q3();
  report.mean_bar_q1 = averager.mean_bar_q1();
  return report;
}

}  // namespace jsqdiff
