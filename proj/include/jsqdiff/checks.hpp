#pragma once

// Self-checks shared by the CLI validate command and the acceptance suite.

#include <cstdint>

#include "jsqdiff/hitting.hpp"
#include "jsqdiff/regen.hpp"
#include "jsqdiff/sde.hpp"

namespace jsqdiff {

// Counts per-step violations of the reflection invariants
//   q1 <= 0, q2 > 0, L nondecreasing, dL > 0 => q1 = 0
// and tracks the one-step residual of
//   dS = sqrt(2 dt) xi - beta dt - q1 dt,  S = q1 + q2,
// relative to dt^2 * max(1, q2). The exact residual of the scheme is
// q2 (e^{-dt} - 1 + dt) <= q2 dt^2 / 2, so the ratio stays below 1.
class ReflectionAuditor : public PathObserver {
 public:
  explicit ReflectionAuditor(const DiffusionParams& params);

  void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) override;

  std::uint64_t steps() const noexcept { return steps_; }
  std::uint64_t violations() const noexcept { return violations_; }
  double worst_identity_ratio() const noexcept { return worst_ratio_; }

 private:
  double beta_;
  double dt_;
  double sqrt_2dt_;
  std::uint64_t steps_ = 0;
  std::uint64_t violations_ = 0;
  double worst_ratio_ = 0.0;
};

struct InvariantReport {
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
  double worst_identity_ratio = 0.0;
  bool pass = false;
};

InvariantReport audit_reflection(const DiffusionParams& params, std::uint64_t steps,
                                 std::uint64_t stream = 0);

struct OracleReport {
  double closed_form = 0.0;
  ProbEstimate mc;
  double z_score = 0.0;
  bool pass = false;  // |z| <= 3
};

// Brownian motion with drift -beta started at 0, exiting (-1, 1) through 1.
OracleReport check_bm_hit_oracle(double beta, const BmHitMcOptions& options);

struct RegenInvariantReport {
  std::size_t cycles = 0;
  double tolerance = 0.0;
  double max_abs_q1 = 0.0;
  std::size_t violations = 0;
  bool pass = false;  // enough cycles and no violation
};

// Runs from (0, 2B) until min_cycles cycles complete or max_horizon elapses.
RegenInvariantReport audit_regeneration(const DiffusionParams& params, double B,
                                        std::size_t min_cycles, double max_horizon,
                                        std::uint64_t stream = 0);

}  // namespace jsqdiff
