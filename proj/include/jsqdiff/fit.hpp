#pragma once

#include <Eigen/Dense>

namespace jsqdiff {

struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  double r_squared = 0.0;
};

// Minimizes sum_i w_i (y_i - X_i b)^2. R^2 is the weighted coefficient of
// determination about the weighted mean of y.
LeastSquaresFit weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& weights);

}  // namespace jsqdiff
