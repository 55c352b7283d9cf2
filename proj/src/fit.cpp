#include "jsqdiff/fit.hpp"

#include "jsqdiff/errors.hpp"

namespace jsqdiff {

LeastSquaresFit weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& weights) {
  if (design.rows() != y.size() || weights.size() != y.size()) {
    throw ConfigError("least squares: dimension mismatch");
  }
  if (design.rows() < design.cols()) throw InsufficientDataError("least squares: too few points");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw NumericError("least squares: weights must be finite and non-negative");
  }

  const Eigen::VectorXd root_w = weights.cwiseSqrt();
  const Eigen::MatrixXd a = root_w.asDiagonal() * design;
  const Eigen::VectorXd b = root_w.cwiseProduct(y);

  LeastSquaresFit fit;
  fit.coefficients = a.colPivHouseholderQr().solve(b);

  const Eigen::VectorXd residual = y - design * fit.coefficients;
  const double w_sum = weights.sum();
  const double y_bar = weights.dot(y) / w_sum;
  const double ss_res = weights.dot(residual.cwiseAbs2());
  const double ss_tot = weights.dot((y.array() - y_bar).matrix().cwiseAbs2());
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace jsqdiff
