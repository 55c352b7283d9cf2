#include <cmath>
#include <vector>

#include "doctest.h"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/sde.hpp"

using namespace jsqdiff;

namespace {

DiffusionParams params_with(double beta, double dt) {
  DiffusionParams p;
  p.beta = beta;
  p.dt = dt;
  return p;
}

}  // namespace

TEST_CASE("step: zero noise, zero drift reflection at the boundary") {
  // beta = 0 is outside the model's parameter range but exercises the update
  // rule exactly: the whole Q2 push is reflected into local time.
  const double y = 1.5, d = 0.01;
  DiffusionState s;
  s.q1 = 0.0;
  s.q2 = y;
  DiffusionParams p;
  p.beta = 0.0;
  p.dt = d;
  const auto next = step(s, p, 0.0);
  CHECK(next.q1 == 0.0);
  CHECK(next.local_time == doctest::Approx(y * d).epsilon(1e-14));
  CHECK(next.q2 == doctest::Approx(y * std::exp(-d) + y * d).epsilon(1e-14));
  CHECK(next.t == doctest::Approx(d));
}

TEST_CASE("step: interior deterministic move leaves L and Q2 decay exact") {
  DiffusionState s;
  s.q1 = -1.0;
  s.q2 = 1.0;
  const auto next = step(s, params_with(1.0, 0.001), 0.0);
  CHECK(next.q1 == doctest::Approx(-0.999).epsilon(1e-14));
  CHECK(next.local_time == 0.0);
  CHECK(next.q2 == std::exp(-0.001));
}

TEST_CASE("step: reflected move with noise") {
  DiffusionState s;
  s.q1 = -0.01;
  s.q2 = 2.0;
  const auto next = step(s, params_with(1.0, 0.001), 1.0);
  // frozen from an independent 30-digit evaluation of the update rule
  CHECK(next.local_time == doctest::Approx(0.0357313595499958).epsilon(1e-13));
  CHECK(next.q1 == 0.0);
  CHECK(next.q2 == doctest::Approx(2.03373235921675).epsilon(1e-13));
  CHECK(next.w_increment_last == 1.0);
}

TEST_CASE("step rejects non-finite input") {
  DiffusionState s;
  s.q2 = 1.0;
  const auto p = params_with(1.0, 0.001);
  CHECK_THROWS_AS(step(s, p, std::nan("")), NumericError);
  CHECK_THROWS_AS(step(s, p, INFINITY), NumericError);
  s.q1 = -INFINITY;
  CHECK_THROWS_AS(step(s, p, 0.0), NumericError);
}

TEST_CASE("params validation names the field") {
  DiffusionParams p;
  p.beta = -1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("beta"), ConfigError);
  p = {};
  p.dt = 0.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("dt"), ConfigError);
  p = {};
  p.q1_init = 0.5;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("q1_init"), ConfigError);
  p = {};
  p.q2_init = 0.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("q2_init"), ConfigError);
}

namespace {

struct StepCounter : PathObserver {
  std::uint64_t steps = 0;
  void on_step(const DiffusionState&, const DiffusionState&, double) override { ++steps; }
};

// Checks every invariant of a step as it happens.
struct InvariantChecker : PathObserver {
  double dt;
  std::uint64_t violations = 0;
  double worst_identity_ratio = 0.0;
  explicit InvariantChecker(double dt) : dt(dt) {}

  void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) override {
    if (!(next.q1 <= 0.0) || !(next.q2 > 0.0) || next.local_time < prev.local_time) ++violations;
    if (delta_l > 0.0 && next.q1 != 0.0) ++violations;
    if (delta_l == 0.0 && next.q2 != prev.q2 * std::exp(-dt)) ++violations;
    const double ds = (next.q1 + next.q2) - (prev.q1 + prev.q2);
    const double expected = std::sqrt(2.0 * dt) * next.w_increment_last - 1.0 * dt - prev.q1 * dt;
    const double bound = 2.0 * std::max(prev.q2, next.q2) * dt * dt;
    worst_identity_ratio = std::max(worst_identity_ratio, std::abs(ds - expected) / bound);
  }
};

}  // namespace

TEST_CASE("simulate_path applies ceil(horizon/dt) steps") {
  DiffusionParams p;
  StepCounter counter;
  PathObserver* obs[] = {&counter};
  auto s = simulate_path(p, p.dt, obs);
  CHECK(counter.steps == 1);
  CHECK(s.steps == 1);

  counter.steps = 0;
  s = simulate_path(p, 2.5 * p.dt, obs);
  CHECK(counter.steps == 3);
  CHECK_THROWS_AS(simulate_path(p, 0.5 * p.dt, obs), ConfigError);
}

TEST_CASE("simulate_path is deterministic per seed and stream") {
  DiffusionParams p;
  p.seed = 11;
  const auto a = simulate_path(p, 50.0, {});
  const auto b = simulate_path(p, 50.0, {});
  const auto c = simulate_path(p, 50.0, {}, 1);
  CHECK(a.q1 == b.q1);
  CHECK(a.q2 == b.q2);
  CHECK(a.local_time == b.local_time);
  CHECK(a.q2 != c.q2);
}

TEST_CASE("path invariants and the one-step S identity hold on every step") {
  DiffusionParams p;
  p.seed = 5;
  InvariantChecker checker(p.dt);
  PathObserver* obs[] = {&checker};
  simulate_path(p, 200.0, obs);
  CHECK(checker.violations == 0);
  CHECK(checker.worst_identity_ratio <= 1.0);
}

TEST_CASE("mean increment of S matches (-beta - q1) dt") {
  // Accumulates both sides of E[dS | state] = (-beta - q1) dt along one path.
  struct Drift : PathObserver {
    double lhs = 0.0, rhs = 0.0;
    double beta, dt;
    Drift(double b, double d) : beta(b), dt(d) {}
    void on_step(const DiffusionState& prev, const DiffusionState& next, double) override {
      lhs += (next.q1 + next.q2) - (prev.q1 + prev.q2);
      rhs += (-beta - prev.q1) * dt;
    }
  };
  DiffusionParams p;
  p.seed = 9;
  Drift drift(p.beta, p.dt);
  PathObserver* obs[] = {&drift};
  const double horizon = 2000.0;
  simulate_path(p, horizon, obs);
  // the martingale part sqrt(2) W(T) has standard deviation sqrt(2 T)
  CHECK(std::abs(drift.lhs - drift.rhs) < 4.0 * std::sqrt(2.0 * horizon));
}
