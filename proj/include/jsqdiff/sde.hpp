#pragma once

// Projected Euler-Maruyama simulation of the JSQ diffusion limit
//
//   dQ1 = sqrt(2) dW - beta dt + (-Q1 + Q2) dt - dL,   Q1 <= 0
//   dQ2 = dL - Q2 dt
//
// where L is the local time of Q1 at zero. Each step proposes an Euler move
// for Q1, clips it to the boundary, credits the clipped amount to L and kicks
// Q2 by the same amount after an exact exponential decay.

#include <cstdint>
#include <span>

#include "jsqdiff/rng.hpp"

namespace jsqdiff {

struct DiffusionParams {
  double beta = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  double q1_init = 0.0;
  double q2_init = 2.0;

  // Throws ConfigError naming the first violated field.
  void validate() const;
};

struct DiffusionState {
  double t = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double local_time = 0.0;
  double w_increment_last = 0.0;  // last xi used; diagnostic only
  std::uint64_t steps = 0;
};

DiffusionState initial_state(const DiffusionParams& params);

// One projected-Euler step driven by the standard normal draw xi.
// Throws NumericError on non-finite input or output.
DiffusionState step(const DiffusionState& state, const DiffusionParams& params, double xi);

// Receives every accepted step. Observers must not mutate the path.
class PathObserver {
 public:
  virtual ~PathObserver() = default;
  virtual void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) = 0;
  // Simulation may stop early once every observer reports done.
  virtual bool done() const { return false; }
};

// Stateful stepper over one RNG stream. Stream r of seed s is the r-th replica.
class DiffusionPath {
 public:
  explicit DiffusionPath(const DiffusionParams& params, std::uint64_t stream = 0);

  const DiffusionState& state() const noexcept { return state_; }
  const DiffusionParams& params() const noexcept { return params_; }

  // Advances one step and returns delta L.
  double advance();

  // Advances n steps, notifying observers. Returns the number of steps taken,
  // which is smaller than n only if all observers became done.
  std::uint64_t run(std::uint64_t n, std::span<PathObserver* const> observers);

 private:
  DiffusionParams params_;
  RandomStream rng_;
  DiffusionState state_;
  double sqrt_2dt_;
  double decay_;
};

// Number of steps covering the horizon: ceil(horizon / dt), with a relative
// slack so that horizon = k * dt is not rounded up to k + 1.
std::uint64_t steps_for_horizon(double horizon, double dt);

// Iterates ceil(horizon/dt) steps from the initial state and returns the final
// state. Same params and stream give a bit-identical trajectory.
DiffusionState simulate_path(const DiffusionParams& params, double horizon,
                             std::span<PathObserver* const> observers, std::uint64_t stream = 0);

}  // namespace jsqdiff
