#pragma once

// Scale-function oracles for the one-dimensional comparison diffusions
//
//   bm_drift:  dX = sqrt(2) dW + mu dt          s(z) = (1 - exp(-mu z)) / mu
//   ou:        dX = sqrt(2) dW + (c - X) dt     s(z) = int_0^z exp((w - c)^2 / 2) dw
//
// and Monte Carlo estimators of the probability that one JSQ regeneration
// cycle reaches a given Q2 or Q1 level.

#include <cstdint>
#include <vector>

#include "jsqdiff/regen.hpp"
#include "jsqdiff/sde.hpp"
#include "jsqdiff/stats.hpp"

namespace jsqdiff {

struct ScaleSpec {
  enum class Kind { bm_drift, ou };
  Kind kind = Kind::bm_drift;
  double drift_mu = 0.0;
  double center = 0.0;

  static ScaleSpec bm_drift(double mu) { return {Kind::bm_drift, mu, 0.0}; }
  static ScaleSpec ou(double center) { return {Kind::ou, 0.0, center}; }
};

struct HitQuery {
  double start = 0.0;
  double up_level = 1.0;
  double down_level = -1.0;

  // Requires down_level < up_level and start in [down_level, up_level].
  void validate() const;
};

// s(0) = 0. OU values via adaptive Gauss-Kronrod to relative error 1e-10.
double scale_value(const ScaleSpec& spec, double z);

// P(hit up_level before down_level | X(0) = start)
//   = (s(start) - s(down)) / (s(up) - s(down)).
// A start sitting on a level returns 1 (up) or 0 (down).
double hit_up_before_down(const ScaleSpec& spec, const HitQuery& query);

// Direct Monte Carlo of sqrt(2) W + mu t exiting (down, up) through up.
// With bridge_correction, each step also checks the Brownian-bridge
// probability of an unobserved crossing, which removes the discrete
// monitoring bias for constant drift.
struct BmHitMcOptions {
  std::size_t paths = 100'000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  bool bridge_correction = true;
  double max_time = 1e4;  // per path; unresolved paths count as misses
};

ProbEstimate mc_bm_hit_up_before_down(double mu, const HitQuery& query,
                                      const BmHitMcOptions& options);

struct HitTarget {
  enum class Kind { q2_up, q1_down };
  Kind kind = Kind::q2_up;
  double level = 0.0;  // y for q2_up, x > 0 for q1_down (target -x)

  static HitTarget q2_up(double y) { return {Kind::q2_up, y}; }
  static HitTarget q1_down(double x) { return {Kind::q1_down, x}; }
};

// Fraction of cycles in which the target is reached before the cycle ends.
// The interpolated path is piecewise linear, so its extrema are the cycle's
// recorded min_q1 / max_q2.
ProbEstimate hit_fraction(std::span<const Cycle> cycles, const HitTarget& target);

struct HitMcOptions {
  std::size_t cycles = 10'000;
  std::size_t replicas = 1;   // independent streams; cycles split evenly
  double max_horizon = 1e8;   // per replica
};

// Runs replicas from (0, 2B) and evaluates every target on the same cycles,
// so estimates for nested targets are ordered pathwise.
std::vector<ProbEstimate> mc_hit_before_regen(const DiffusionParams& params,
                                              const RegenConfig& config,
                                              std::span<const HitTarget> targets,
                                              const HitMcOptions& options);

// Lower bound (1 - e^{-beta B}) e^{-beta (y - 2B)} on the Q2 target.
double q2_hit_lower_bound(double beta, double B, double y);

}  // namespace jsqdiff
