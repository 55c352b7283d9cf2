#include "jsqdiff/mmn.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "jsqdiff/errors.hpp"
#include "jsqdiff/fit.hpp"
#include "jsqdiff/regen.hpp"
#include "jsqdiff/rng.hpp"

namespace jsqdiff {

namespace {

using Quadrature = boost::math::quadrature::gauss_kronrod<double, 31>;

double integrate(const auto& f, double a, double b) {
  double error = 0.0;
  const double v = Quadrature::integrate(f, a, b, 30, 1e-13, &error);
  if (!std::isfinite(v) || error > 1e-9 * std::max(std::abs(v), 1e-300)) {
    throw NumericError("M/M/N density quadrature did not converge");
  }
  return v;
}

}  // namespace

void MmnParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("horizon must be >= dt");
  if (!std::isfinite(x_init)) throw ConfigError("x_init must be finite");
}

double mmn_drift(double x, double beta) noexcept { return x > 0.0 ? -beta : -(x + beta); }

double mmn_step(double x, const MmnParams& params, double xi) {
  if (!std::isfinite(x) || !std::isfinite(xi)) throw NumericError("non-finite M/M/N step input");
  return x + mmn_drift(x, params.beta) * params.dt + std::sqrt(2.0 * params.dt) * xi;
}

double mmn_density_unnormalized(double x, double beta) noexcept {
  return x > 0.0 ? std::exp(-beta * x) : std::exp(-0.5 * x * x - beta * x);
}

double mmn_stationary_tail(double beta, double x) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (std::isnan(x)) throw NumericError("tail argument is NaN");
  const auto density = [beta](double u) { return mmn_density_unnormalized(u, beta); };
  const double inf = std::numeric_limits<double>::infinity();
  const double lower_mass = integrate(density, -inf, 0.0);
  const double upper_mass = integrate(density, 0.0, inf);
  const double total = lower_mass + upper_mass;
  if (x == inf) return 0.0;
  if (x == -inf) return 1.0;
  double above;
  if (x >= 0.0) {
    above = x == 0.0 ? upper_mass : integrate(density, x, inf);
  } else {
    above = integrate(density, x, 0.0) + upper_mass;
  }
  return std::clamp(above / total, 0.0, 1.0);
}

MmnSimulation mmn_simulate(const MmnParams& params, std::span<const double> upper_levels,
                           std::span<const double> lower_levels, double lower_hist_max,
                           double lower_hist_width) {
  params.validate();
  const double batch = params.horizon / 100.0;
  BatchMeans positive(batch);
  std::vector<BatchMeans> upper(upper_levels.size(), BatchMeans(batch));
  std::vector<BatchMeans> lower(lower_levels.size(), BatchMeans(batch));

  const auto n_bins = static_cast<std::size_t>(std::llround(lower_hist_max / lower_hist_width));
  MmnSimulation sim;
  sim.lower_hist_time.assign(n_bins, 0.0);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    sim.lower_hist_edges.push_back(static_cast<double>(i) * lower_hist_width);
  }

  RandomStream rng(params.seed, 0);
  const auto steps = steps_for_horizon(params.horizon, params.dt);
  const double sd = std::sqrt(2.0 * params.dt);
  double x = params.x_init;
  sim.path_min = x;
  for (std::uint64_t k = 0; k < steps; ++k) {
    positive.add(x > 0.0 ? 1.0 : 0.0, params.dt);
    for (std::size_t i = 0; i < upper.size(); ++i) {
      upper[i].add(x > upper_levels[i] ? 1.0 : 0.0, params.dt);
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
      lower[i].add(x < -lower_levels[i] ? 1.0 : 0.0, params.dt);
    }
    if (x < 0.0) {
      const auto bin = static_cast<std::size_t>(-x / lower_hist_width);
      if (bin < n_bins) sim.lower_hist_time[bin] += params.dt;
    }
    const double next = x + mmn_drift(x, params.beta) * params.dt + sd * rng.normal();
    if (!std::isfinite(next)) throw NumericError("M/M/N path became non-finite");
    if ((x > 0.0) != (next > 0.0)) sim.crossed_zero = true;
    x = next;
    sim.path_min = std::min(sim.path_min, x);
  }

  sim.total_time = positive.total_time();
  sim.p_positive = positive.estimate();
  for (std::size_t i = 0; i < upper.size(); ++i) {
    const auto e = upper[i].estimate();
    sim.upper_tail.push_back({upper_levels[i], e.value, e.std_err});
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const auto e = lower[i].estimate();
    sim.lower_tail.push_back({lower_levels[i], e.value, e.std_err});
  }
  return sim;
}

LogDensityFit fit_lower_log_density(const MmnSimulation& sim, double u_lo, double u_hi) {
  std::vector<double> mids, logs, weights;
  for (std::size_t i = 0; i < sim.lower_hist_time.size(); ++i) {
    const double a = sim.lower_hist_edges[i];
    const double b = sim.lower_hist_edges[i + 1];
    const double mid = 0.5 * (a + b);
    if (mid < u_lo || mid > u_hi || sim.lower_hist_time[i] <= 0.0) continue;
    mids.push_back(mid);
    logs.push_back(std::log(sim.lower_hist_time[i] / ((b - a) * sim.total_time)));
    weights.push_back(sim.lower_hist_time[i]);
  }
  if (mids.size() < 4) throw InsufficientDataError("lower density fit needs >= 4 occupied bins");

  const auto n = static_cast<Eigen::Index>(mids.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = mids[static_cast<std::size_t>(i)];
    design(i, 0) = u * u;
    design(i, 1) = u;
    design(i, 2) = 1.0;
    y(i) = logs[static_cast<std::size_t>(i)];
    w(i) = weights[static_cast<std::size_t>(i)];
  }
  const auto ls = weighted_least_squares(design, y, w);
  return {ls.coefficients(0), ls.coefficients(1), ls.coefficients(2), ls.r_squared,
          {mids.front(), mids.back()}};
}

MmnTailReport mmn_tail_compare(const MmnParams& params, const MmnCompareOptions& options) {
  params.validate();
  if (params.horizon < 1e4) throw InsufficientDataError("M/M/N comparison needs horizon >= 1e4");

  MmnTailReport report;
  report.beta = params.beta;
  const auto sim = mmn_simulate(params, options.upper_levels, options.lower_levels);
  report.p_positive_sim = sim.p_positive;
  report.p_positive_exact = mmn_stationary_tail(params.beta, 0.0);
  report.upper_tail_sim = sim.upper_tail;
  report.lower_tail_sim = sim.lower_tail;
  for (double x : options.upper_levels) {
    report.upper_tail_exact.push_back(mmn_stationary_tail(params.beta, x));
  }
  for (double x : options.lower_levels) {
    report.lower_tail_exact.push_back(1.0 - mmn_stationary_tail(params.beta, -x));
  }
  report.upper_fit = fit_exponential(TailCurve{TailCoordinate::q2_upper, sim.upper_tail, {}});
  report.lower_fit_pure = fit_gaussian(TailCurve{TailCoordinate::q1_lower, sim.lower_tail, {}});
  report.lower_density_fit = fit_lower_log_density(sim, options.density_lo, options.density_hi);
  report.mmn_path_min = sim.path_min;
  report.mmn_crossed_zero = sim.crossed_zero;

  // JSQ diffusion total S = Q1 + Q2 on the same horizon and seed
  DiffusionParams jsq;
  jsq.beta = params.beta;
  jsq.dt = params.dt;
  jsq.seed = params.seed;
  jsq.q1_init = 0.0;
  jsq.q2_init = 2.0 * default_regen_level(params.beta);
  const double batch = params.horizon / 100.0;
  std::vector<ErgodicAverager> upper, lower;
  for (double x : options.upper_levels) {
    upper.emplace_back([x](const PathPoint& p) { return p.q1 + p.q2 > x ? 1.0 : 0.0; }, batch);
  }
  for (double x : options.lower_levels) {
    lower.emplace_back([x](const PathPoint& p) { return p.q1 + p.q2 < -x ? 1.0 : 0.0; }, batch);
  }
  class MinQ2 : public PathObserver {
   public:
    double min = std::numeric_limits<double>::infinity();
    void on_step(const DiffusionState& prev, const DiffusionState& next, double) override {
      min = std::min({min, prev.q2, next.q2});
    }
  } min_q2;
  std::vector<PathObserver*> observers{&min_q2};
  for (auto& a : upper) observers.push_back(&a);
  for (auto& a : lower) observers.push_back(&a);
  simulate_path(jsq, params.horizon, observers, 1);
  for (std::size_t i = 0; i < upper.size(); ++i) {
    const auto e = upper[i].estimate();
    report.jsq_upper_tail.push_back({options.upper_levels[i], e.value, e.std_err});
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const auto e = lower[i].estimate();
    report.jsq_lower_tail.push_back({options.lower_levels[i], e.value, e.std_err});
  }
  report.jsq_q2_min = min_q2.min;
  return report;
}

}  // namespace jsqdiff
