#include "jsqdiff/tails.hpp"

#include <algorithm>
#include <cmath>

#include "jsqdiff/csv.hpp"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/fit.hpp"

namespace jsqdiff {

const char* to_string(TailCoordinate c) {
  return c == TailCoordinate::q1_lower ? "q1_lower" : "q2_upper";
}

const char* to_string(FitModel m) {
  return m == FitModel::exp_in_level ? "exp_in_level" : "gauss_in_level_squared";
}

TailCurve TailCurve::window(double lo, double hi) const {
  TailCurve out{coordinate, {}, warnings};
  for (const auto& p : points) {
    if (p.level >= lo - 1e-12 && p.level <= hi + 1e-12) out.points.push_back(p);
  }
  return out;
}

TailCurve tail_curve(std::span<const Cycle> cycles, TailCoordinate coordinate,
                     std::span<const double> levels) {
  if (cycles.size() < 100) throw InsufficientDataError("tail curve needs >= 100 cycles");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw ConfigError("tail levels must be strictly increasing");
  }
  TailCurve curve;
  curve.coordinate = coordinate;
  for (double level : levels) {
    const auto event = coordinate == TailCoordinate::q1_lower ? EventQuery::q1_below(level)
                                                              : EventQuery::q2_above(level);
    const auto est = regenerative_estimate(cycles, event);
    if (est.value <= 0.0) {
      curve.warnings.push_back(std::string(to_string(coordinate)) + " level " +
                               csv::number(level) + " never visited; point dropped");
      continue;
    }
    curve.points.push_back({level, est.value, est.std_err});
  }
  return curve;
}

namespace {

FitResult fit_log_tail(const TailCurve& curve, FitModel model) {
  std::vector<TailPoint> pts;
  for (const auto& p : curve.points) {
    if (p.prob > 0.0) pts.push_back(p);
  }
  if (pts.size() < 4) throw InsufficientDataError("tail fit needs >= 4 points with prob > 0");

  const auto n = static_cast<Eigen::Index>(pts.size());
  double min_rel = 0.0;
  for (const auto& p : pts) {
    const double rel = p.std_err / p.prob;
    if (rel > 0.0 && (min_rel == 0.0 || rel < min_rel)) min_rel = rel;
  }

  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    const double x = model == FitModel::exp_in_level ? p.level : p.level * p.level;
    design(i, 0) = x;
    design(i, 1) = 1.0;
    y(i) = std::log(p.prob);
    if (min_rel == 0.0) {
      w(i) = 1.0;
    } else {
      const double rel = std::max(p.std_err / p.prob, min_rel);
      w(i) = 1.0 / (rel * rel);
    }
  }
  const auto ls = weighted_least_squares(design, y, w);

  FitResult fit;
  fit.model = model;
  fit.slope = ls.coefficients(0);
  fit.intercept = ls.coefficients(1);
  fit.r_squared = std::clamp(ls.r_squared, 0.0, 1.0);
  fit.level_range = {pts.front().level, pts.back().level};
  fit.points = pts.size();
  return fit;
}

}  // namespace

FitResult fit_exponential(const TailCurve& curve) {
  return fit_log_tail(curve, FitModel::exp_in_level);
}

FitResult fit_gaussian(const TailCurve& curve) {
  return fit_log_tail(curve, FitModel::gauss_in_level_squared);
}

std::pair<double, double> ExtremaSeries::relative_change_last_two() const {
  if (checkpoints.size() < 2) throw InsufficientDataError("need two checkpoints");
  const auto& a = checkpoints[checkpoints.size() - 2];
  const auto& b = checkpoints.back();
  return {std::abs(b.min_q1_over_sqrt_log_t - a.min_q1_over_sqrt_log_t) /
              std::abs(a.min_q1_over_sqrt_log_t),
          std::abs(b.max_q2_over_log_t - a.max_q2_over_log_t) / std::abs(a.max_q2_over_log_t)};
}

std::vector<double> geometric_checkpoints(double horizon) {
  std::vector<double> out;
  for (int j = 1;; ++j) {
    const double t = std::pow(10.0, 0.5 * j);
    if (t > horizon * (1.0 + 1e-12)) break;
    if (t >= 3.0) out.push_back(t);
  }
  return out;
}

ExtremaTracker::ExtremaTracker(std::vector<double> checkpoints)
    : checkpoints_(std::move(checkpoints)) {
  for (std::size_t i = 0; i < checkpoints_.size(); ++i) {
    if (!(checkpoints_[i] >= 3.0)) throw ConfigError("extrema checkpoints must be >= 3");
    if (i > 0 && !(checkpoints_[i] > checkpoints_[i - 1])) {
      throw ConfigError("extrema checkpoints must be strictly increasing");
    }
  }
}

void ExtremaTracker::start(const PathPoint& p0) {
  min_q1_ = p0.q1;
  max_q2_ = p0.q2;
  min_q2_ = p0.q2;
  started_ = true;
}

void ExtremaTracker::push(const PathPoint& next) {
  min_q1_ = std::min(min_q1_, next.q1);
  max_q2_ = std::max(max_q2_, next.q2);
  min_q2_ = std::min(min_q2_, next.q2);
  while (next_ < checkpoints_.size() && next.t >= checkpoints_[next_] * (1.0 - 1e-12)) {
    const double t = checkpoints_[next_];
    const double log_t = std::log(t);
    series_.checkpoints.push_back(
        {t, min_q1_, max_q2_, min_q1_ / std::sqrt(log_t), max_q2_ / log_t});
    ++next_;
  }
}

void ExtremaTracker::on_step(const DiffusionState& prev, const DiffusionState& next, double) {
  if (!started_) start(to_point(prev));
  push(to_point(next));
}

ExtremaSeries extrema_track(const DiffusionParams& params, double horizon,
                            std::vector<double> checkpoints, std::uint64_t stream) {
  if (!checkpoints.empty() && checkpoints.back() > horizon * (1.0 + 1e-12)) {
    throw ConfigError("extrema checkpoints must not exceed the horizon");
  }
  ExtremaTracker tracker(std::move(checkpoints));
  PathObserver* observers[] = {&tracker};
  simulate_path(params, horizon, observers, stream);
  return tracker.series();
}

}  // namespace jsqdiff
