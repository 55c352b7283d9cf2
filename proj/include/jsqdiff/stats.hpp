#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace jsqdiff {

// Monte Carlo estimate: probability or ratio, with standard error.
struct ProbEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

// Welford mean/variance; merge is order-independent up to rounding.
class RunningStats {
 public:
  void add(double x) noexcept;
  void merge(const RunningStats& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // sample variance, 0 when n < 2
  double std_err() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Binomial proportion with SE sqrt(p(1-p)/n).
ProbEstimate binomial_estimate(std::size_t hits, std::size_t n);

// Time average of a piecewise-constant signal with batch-means SE.
// Time is cut into consecutive batches of fixed length; each batch average is
// one observation of the batch-means estimator.
class BatchMeans {
 public:
  explicit BatchMeans(double batch_length);

  // Adds value * duration, splitting at batch boundaries.
  void add(double value, double duration);

  double total_time() const noexcept { return total_time_; }
  double mean() const noexcept;
  // SE over completed batches; 0 when fewer than 2.
  double std_err() const noexcept;
  std::size_t batches() const noexcept { return batch_stats_.count(); }
  ProbEstimate estimate() const;

 private:
  double batch_length_;
  double total_time_ = 0.0;
  double integral_ = 0.0;
  double batch_time_ = 0.0;
  double batch_integral_ = 0.0;
  RunningStats batch_stats_;
};

}  // namespace jsqdiff
