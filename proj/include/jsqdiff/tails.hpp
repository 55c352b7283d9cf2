#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jsqdiff/regen.hpp"
#include "jsqdiff/sde.hpp"

namespace jsqdiff {

enum class TailCoordinate { q1_lower, q2_upper };

const char* to_string(TailCoordinate c);

struct TailPoint {
  double level = 0.0;
  double prob = 0.0;
  double std_err = 0.0;
};

// pi(Q1 < -x) or pi(Q2 > y) on increasing levels. Levels whose estimate is
// exactly zero are dropped and listed in warnings.
struct TailCurve {
  TailCoordinate coordinate = TailCoordinate::q2_upper;
  std::vector<TailPoint> points;
  std::vector<std::string> warnings;

  // Points with level in [lo, hi].
  TailCurve window(double lo, double hi) const;
};

// Regenerative estimate at each level from the same cycles. Requires >= 100
// cycles and levels on the cycles' grid.
TailCurve tail_curve(std::span<const Cycle> cycles, TailCoordinate coordinate,
                     std::span<const double> levels);

enum class FitModel { exp_in_level, gauss_in_level_squared };

const char* to_string(FitModel m);

struct FitResult {
  FitModel model = FitModel::exp_in_level;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> level_range{0.0, 0.0};
  std::size_t points = 0;
};

// Weighted least squares of log(prob) on level (exp) or level^2 (gauss), with
// weights (prob / std_err)^2. Zero standard errors are floored at the
// smallest positive relative error on the curve; all-zero errors fall back
// to equal weights. Requires >= 4 points.
FitResult fit_exponential(const TailCurve& curve);
FitResult fit_gaussian(const TailCurve& curve);

struct ExtremaCheckpoint {
  double t = 0.0;
  double running_min_q1 = 0.0;
  double running_max_q2 = 0.0;
  double min_q1_over_sqrt_log_t = 0.0;
  double max_q2_over_log_t = 0.0;
};

struct ExtremaSeries {
  std::vector<ExtremaCheckpoint> checkpoints;

  // |r_last - r_prev| / |r_prev| for both normalized ratios.
  std::pair<double, double> relative_change_last_two() const;
};

// 10^{j/2} for j >= 1, keeping 3 <= t <= horizon.
std::vector<double> geometric_checkpoints(double horizon);

// Running extrema of a path, sampled at checkpoint times. The record for a
// checkpoint is taken at the first sample with t >= checkpoint.
class ExtremaTracker : public PathObserver {
 public:
  explicit ExtremaTracker(std::vector<double> checkpoints);

  void start(const PathPoint& p0);
  void push(const PathPoint& next);
  void on_step(const DiffusionState& prev, const DiffusionState& next, double delta_l) override;

  const ExtremaSeries& series() const noexcept { return series_; }
  double running_min_q1() const noexcept { return min_q1_; }
  double running_max_q2() const noexcept { return max_q2_; }
  double running_min_q2() const noexcept { return min_q2_; }

 private:
  std::vector<double> checkpoints_;
  std::size_t next_ = 0;
  bool started_ = false;
  double min_q1_ = 0.0;
  double max_q2_ = 0.0;
  double min_q2_ = 0.0;
  ExtremaSeries series_;
};

ExtremaSeries extrema_track(const DiffusionParams& params, double horizon,
                            std::vector<double> checkpoints, std::uint64_t stream = 0);

}  // namespace jsqdiff
