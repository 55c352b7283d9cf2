#include "jsqdiff/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jsqdiff/errors.hpp"

namespace jsqdiff {

namespace {

// Shared kernel; sqrt_2dt and decay are precomputed by DiffusionPath.
inline DiffusionState step_kernel(const DiffusionState& s, double beta, double dt, double sqrt_2dt,
                                  double decay, double xi) {
  if (!std::isfinite(xi) || !std::isfinite(s.q1) || !std::isfinite(s.q2) ||
      !std::isfinite(s.local_time)) {
    throw NumericError("non-finite value entering diffusion step at t=" + std::to_string(s.t));
  }
  const double proposal = s.q1 + (-beta + (-s.q1 + s.q2)) * dt + sqrt_2dt * xi;
  const double delta_l = proposal > 0.0 ? proposal : 0.0;

  DiffusionState next;
  next.q1 = delta_l > 0.0 ? 0.0 : proposal;
  next.q2 = s.q2 * decay + delta_l;
  next.local_time = s.local_time + delta_l;
  next.w_increment_last = xi;
  next.steps = s.steps + 1;
  next.t = static_cast<double>(next.steps) * dt;
  if (!std::isfinite(next.q1) || !std::isfinite(next.q2) || !(next.q2 > 0.0)) {
    throw NumericError("diffusion step produced invalid state at t=" + std::to_string(next.t));
  }
  return next;
}

}  // namespace

void DiffusionParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  if (!(q1_init <= 0.0)) throw ConfigError("q1_init must be <= 0");
  if (!(q2_init > 0.0) || !std::isfinite(q2_init)) throw ConfigError("q2_init must be positive");
}

DiffusionState initial_state(const DiffusionParams& params) {
  DiffusionState s;
  s.q1 = params.q1_init;
  s.q2 = params.q2_init;
  return s;
}

DiffusionState step(const DiffusionState& state, const DiffusionParams& params, double xi) {
  return step_kernel(state, params.beta, params.dt, std::sqrt(2.0 * params.dt),
                     std::exp(-params.dt), xi);
}

DiffusionPath::DiffusionPath(const DiffusionParams& params, std::uint64_t stream)
    : params_(params), rng_(params.seed, stream) {
  params_.validate();
  state_ = initial_state(params_);
  sqrt_2dt_ = std::sqrt(2.0 * params_.dt);
  decay_ = std::exp(-params_.dt);
}

double DiffusionPath::advance() {
  const double before = state_.local_time;
  state_ = step_kernel(state_, params_.beta, params_.dt, sqrt_2dt_, decay_, rng_.normal());
  return state_.local_time - before;
}

std::uint64_t DiffusionPath::run(std::uint64_t n, std::span<PathObserver* const> observers) {
  for (std::uint64_t i = 0; i < n; ++i) {
    const DiffusionState prev = state_;
    const double delta_l = advance();
    bool all_done = !observers.empty();
    for (PathObserver* obs : observers) {
      obs->on_step(prev, state_, delta_l);
      all_done = all_done && obs->done();
    }
    if (all_done) return i + 1;
  }
  return n;
}

std::uint64_t steps_for_horizon(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::uint64_t>(rounded);
  }
  return static_cast<std::uint64_t>(std::ceil(ratio));
}

DiffusionState simulate_path(const DiffusionParams& params, double horizon,
                             std::span<PathObserver* const> observers, std::uint64_t stream) {
  if (!(horizon >= params.dt)) throw ConfigError("horizon must be >= dt");
  DiffusionPath path(params, stream);
  path.run(steps_for_horizon(horizon, params.dt), observers);
  return path.state();
}

}  // namespace jsqdiff
