#include "jsqdiff/stats.hpp"

#include <cmath>

#include "jsqdiff/errors.hpp"

namespace jsqdiff {

void RunningStats::add(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * nb / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

double RunningStats::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_err() const noexcept {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

ProbEstimate binomial_estimate(std::size_t hits, std::size_t n) {
  if (n == 0) throw InsufficientDataError("binomial estimate needs at least one trial");
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

BatchMeans::BatchMeans(double batch_length) : batch_length_(batch_length) {
  if (!(batch_length > 0.0)) throw ConfigError("batch_length must be positive");
}

void BatchMeans::add(double value, double duration) {
  total_time_ += duration;
  integral_ += value * duration;
  while (duration > 0.0) {
    const double room = batch_length_ - batch_time_;
    const double take = duration < room ? duration : room;
    batch_time_ += take;
    batch_integral_ += value * take;
    duration -= take;
    if (batch_time_ >= batch_length_ * (1.0 - 1e-12)) {
      batch_stats_.add(batch_integral_ / batch_time_);
      batch_time_ = 0.0;
      batch_integral_ = 0.0;
    }
  }
}

double BatchMeans::mean() const noexcept {
  return total_time_ > 0.0 ? integral_ / total_time_ : 0.0;
}

double BatchMeans::std_err() const noexcept { return batch_stats_.std_err(); }

ProbEstimate BatchMeans::estimate() const {
  if (total_time_ <= 0.0) throw InsufficientDataError("time average over zero time");
  return {mean(), std_err(), batch_stats_.count()};
}

}  // namespace jsqdiff
