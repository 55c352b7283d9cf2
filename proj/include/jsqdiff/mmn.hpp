#pragma once

// Halfin-Whitt limit of the centered, scaled M/M/N task count:
//   dS = m(S) dt + sqrt(2) dW,   m(x) = -beta (x > 0),  -(x + beta) (x <= 0).
// Its stationary density is exp(int m) with sigma^2 = 2:
//   p(x) ~ exp(-beta x)               x > 0
//   p(x) ~ exp(-x^2 / 2 - beta x)     x <= 0
// continuous at 0.

#include <cstdint>
#include <span>
#include <vector>

#include "jsqdiff/stats.hpp"
#include "jsqdiff/tails.hpp"

namespace jsqdiff {

struct MmnParams {
  double beta = 1.0;
  double dt = 1e-3;
  double horizon = 1e4;
  std::uint64_t seed = 0;
  double x_init = 0.0;

  void validate() const;
};

double mmn_drift(double x, double beta) noexcept;

// Euler step with the drift evaluated at the pre-step point.
double mmn_step(double x, const MmnParams& params, double xi);

// Unnormalized stationary density; equals 1 at x = 0 from both sides.
double mmn_density_unnormalized(double x, double beta) noexcept;

// P(S(inf) > x), normalization and tail mass by adaptive quadrature.
double mmn_stationary_tail(double beta, double x);

struct LogDensityFit {
  double quadratic = 0.0;  // coefficient of u^2 in log p(-u)
  double linear = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> range{0.0, 0.0};
};

struct MmnSimulation {
  ProbEstimate p_positive;            // P(S > 0)
  std::vector<TailPoint> upper_tail;  // P(S > x)
  std::vector<TailPoint> lower_tail;  // P(S < -x), level = x
  // Occupation-time histogram of u = -S over [0, lower_hist_max) in equal bins.
  std::vector<double> lower_hist_edges;
  std::vector<double> lower_hist_time;
  double total_time = 0.0;
  double path_min = 0.0;
  bool crossed_zero = false;
};

// One Euler path over params.horizon; time averages use the left-endpoint
// rule with batch-means standard errors.
MmnSimulation mmn_simulate(const MmnParams& params, std::span<const double> upper_levels,
                           std::span<const double> lower_levels, double lower_hist_max = 4.0,
                           double lower_hist_width = 0.1);

// Weighted quadratic fit of the log occupation density of u = -S on
// [u_lo, u_hi]; weights are the bin occupation times.
LogDensityFit fit_lower_log_density(const MmnSimulation& sim, double u_lo, double u_hi);

struct MmnTailReport {
  double beta = 0.0;
  ProbEstimate p_positive_sim;
  double p_positive_exact = 0.0;
  std::vector<TailPoint> upper_tail_sim;
  std::vector<double> upper_tail_exact;
  std::vector<TailPoint> lower_tail_sim;
  std::vector<double> lower_tail_exact;
  FitResult upper_fit;             // slope should be -beta
  LogDensityFit lower_density_fit; // quadratic coefficient should be -1/2
  FitResult lower_fit_pure;        // log P(S < -x) on x^2 alone, for reference
  // JSQ diffusion S = Q1 + Q2 over the same horizon, for contrast
  std::vector<TailPoint> jsq_upper_tail;
  std::vector<TailPoint> jsq_lower_tail;
  double jsq_q2_min = 0.0;
  double mmn_path_min = 0.0;
  bool mmn_crossed_zero = false;
};

struct MmnCompareOptions {
  std::vector<double> upper_levels{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> lower_levels{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  double density_lo = 0.25;
  double density_hi = 3.5;
};

// Requires horizon >= 1e4.
MmnTailReport mmn_tail_compare(const MmnParams& params, const MmnCompareOptions& options = {});

}  // namespace jsqdiff
