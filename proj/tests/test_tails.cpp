#include <cmath>
#include <vector>

#include "doctest.h"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/rng.hpp"
#include "jsqdiff/tails.hpp"

using namespace jsqdiff;

namespace {

TailCurve synthetic(TailCoordinate coord, std::vector<double> levels, auto prob) {
  TailCurve c;
  c.coordinate = coord;
  for (double x : levels) c.points.push_back({x, prob(x), 0.05 * prob(x)});
  return c;
}

struct Beta1Run {
  std::vector<Cycle> cycles;
  ProbEstimate time_avg_q2_above_3;
  ExtremaSeries extrema;
};

const Beta1Run& beta1_run() {
  static const Beta1Run run = [] {
    DiffusionParams p;
    p.seed = 99;
    auto cfg = RegenConfig::for_params(p, 1.0);
    CycleObserver cycles(cfg);
    ErgodicAverager avg([](const PathPoint& s) { return s.q2 > 3.0 ? 1.0 : 0.0; }, 200.0);
    const double horizon = 2e4;
    ExtremaTracker extrema(geometric_checkpoints(horizon));
    PathObserver* obs[] = {&cycles, &avg, &extrema};
    simulate_path(p, horizon, obs);
    return Beta1Run{cycles.detector().take_cycles(), avg.estimate(), extrema.series()};
  }();
  return run;
}

}  // namespace

TEST_CASE("exponential fit recovers exact log-linear data") {
  const auto curve = synthetic(TailCoordinate::q2_upper, {1.0, 1.5, 2.0, 3.0, 4.5},
                               [](double y) { return std::exp(-2.0 * y); });
  const auto fit = fit_exponential(curve);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.level_range == std::pair{1.0, 4.5});
  CHECK(fit.model == FitModel::exp_in_level);
}

TEST_CASE("gaussian fit recovers exact log-quadratic data") {
  const auto curve = synthetic(TailCoordinate::q1_lower, {0.5, 1.0, 1.5, 2.0, 2.5},
                               [](double x) { return std::exp(-x * x); });
  const auto fit = fit_gaussian(curve);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fits recover random exact models to 1e-9") {
  RandomStream rng(8, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double slope = -0.05 - 5.0 * rng.uniform();
    const double intercept = -3.0 * rng.uniform();
    std::vector<double> levels;
    double x = 0.1 + rng.uniform();
    const int n = 4 + static_cast<int>(8 * rng.uniform());
    for (int i = 0; i < n; ++i) {
      levels.push_back(x);
      x += 0.1 + rng.uniform();
    }
    TailCurve exp_curve, gauss_curve;
    for (double l : levels) {
      const double pe = std::exp(intercept + slope * l);
      const double pg = std::exp(intercept + slope * l * l);
      const double rel = 0.01 + rng.uniform();
      exp_curve.points.push_back({l, pe, rel * pe});
      gauss_curve.points.push_back({l, pg, rel * pg});
    }
    CHECK(fit_exponential(exp_curve).slope == doctest::Approx(slope).epsilon(1e-9));
    CHECK(fit_gaussian(gauss_curve).slope == doctest::Approx(slope).epsilon(1e-9));
  }
}

TEST_CASE("fit weights: zero standard errors") {
  TailCurve curve;
  for (double y : {0.0, 1.0, 2.0, 3.0}) curve.points.push_back({y, std::exp(-y), 0.0});
  CHECK(fit_exponential(curve).slope == doctest::Approx(-1.0));
  curve.points[1].std_err = 0.01;
  CHECK(fit_exponential(curve).slope == doctest::Approx(-1.0));
}

TEST_CASE("fits need four usable points") {
  TailCurve curve;
  for (double y : {1.0, 2.0, 3.0}) curve.points.push_back({y, std::exp(-y), 0.01});
  CHECK_THROWS_AS(fit_exponential(curve), InsufficientDataError);
  curve.points.push_back({4.0, 0.0, 0.0});
  CHECK_THROWS_AS(fit_gaussian(curve), InsufficientDataError);
}

TEST_CASE("tail curves from simulated cycles") {
  const auto& run = beta1_run();
  REQUIRE(run.cycles.size() >= 100);

  const std::vector<double> low{0.0};
  const auto full = tail_curve(run.cycles, TailCoordinate::q2_upper, low);
  REQUIRE(full.points.size() == 1);
  CHECK(full.points[0].prob == 1.0);

  const std::vector<double> levels{2.0, 4.0, 6.0};
  const auto q2 = tail_curve(run.cycles, TailCoordinate::q2_upper, levels);
  REQUIRE(q2.points.size() == 3);
  CHECK(q2.points[0].prob > q2.points[1].prob);
  CHECK(q2.points[1].prob > q2.points[2].prob);

  // monotone by construction on the whole grid
  const auto& grid = run.cycles.front().grid;
  const auto q1 = tail_curve(run.cycles, TailCoordinate::q1_lower, grid->q1_depths);
  for (std::size_t i = 1; i < q1.points.size(); ++i) {
    CHECK(q1.points[i].prob <= q1.points[i - 1].prob);
    CHECK(q1.points[i].level > q1.points[i - 1].level);
  }

  const std::vector<double> unsorted{4.0, 2.0};
  CHECK_THROWS_AS(tail_curve(run.cycles, TailCoordinate::q2_upper, unsorted), ConfigError);
  CHECK_THROWS_AS(tail_curve(std::span(run.cycles).first(99), TailCoordinate::q2_upper, levels),
                  InsufficientDataError);
}

TEST_CASE("unvisited levels are dropped with a warning") {
  const auto& run = beta1_run();
  const std::vector<double> levels{2.0, 12.0};
  const auto curve = tail_curve(run.cycles, TailCoordinate::q2_upper, levels);
  CHECK(curve.points.size() == 1);
  REQUIRE(curve.warnings.size() == 1);
  CHECK(curve.warnings[0].find("12") != std::string::npos);
}

TEST_CASE("tail curve point agrees with the direct time average") {
  const auto& run = beta1_run();
  const std::vector<double> levels{3.0};
  const auto curve = tail_curve(run.cycles, TailCoordinate::q2_upper, levels);
  const auto& pt = curve.points.at(0);
  const auto& ta = run.time_avg_q2_above_3;
  CHECK(std::abs(pt.prob - ta.value) <= 3.0 * std::hypot(pt.std_err, ta.std_err));
}

TEST_CASE("geometric checkpoints") {
  const auto cps = geometric_checkpoints(1e5);
  REQUIRE(cps.size() == 10);
  CHECK(cps.front() == doctest::Approx(std::sqrt(10.0)));
  CHECK(cps.back() == doctest::Approx(1e5));
  CHECK(geometric_checkpoints(2.0).empty());
}

TEST_CASE("extrema tracker on a synthetic log path") {
  std::vector<double> cps{10.0, 100.0, 1000.0};
  ExtremaTracker tracker(cps);
  tracker.start({1.0, 0.0, 0.0});
  for (int i = 2; i <= 1000; ++i) {
    const double t = i;
    tracker.push({t, -std::sqrt(std::log(t)), std::log(t)});
  }
  const auto& s = tracker.series();
  REQUIRE(s.checkpoints.size() == 3);
  for (const auto& c : s.checkpoints) {
    CHECK(c.max_q2_over_log_t == doctest::Approx(1.0));
    CHECK(c.min_q1_over_sqrt_log_t == doctest::Approx(-1.0));
  }
  CHECK_THROWS_AS(ExtremaTracker({2.0}), ConfigError);
  CHECK_THROWS_AS(ExtremaTracker({10.0, 5.0}), ConfigError);
}

TEST_CASE("simulated extrema series is monotone") {
  const auto& s = beta1_run().extrema;
  REQUIRE(s.checkpoints.size() == 8);
  for (std::size_t i = 1; i < s.checkpoints.size(); ++i) {
    CHECK(s.checkpoints[i].t > s.checkpoints[i - 1].t);
    CHECK(s.checkpoints[i].running_min_q1 <= s.checkpoints[i - 1].running_min_q1);
    CHECK(s.checkpoints[i].running_max_q2 >= s.checkpoints[i - 1].running_max_q2);
  }
  CHECK_THROWS_AS(extrema_track(DiffusionParams{}, 50.0, {100.0}), ConfigError);
}
