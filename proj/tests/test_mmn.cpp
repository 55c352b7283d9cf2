#include <cmath>
#include <limits>

#include "doctest.h"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/mmn.hpp"

using namespace jsqdiff;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Closed-form oracle: P(S > 0) = 1 / (1 + beta Phi(beta) / phi(beta)).
double p_positive(double beta) { return 1.0 / (1.0 + beta * Phi(beta) / phi(beta)); }

}  // namespace

TEST_CASE("mmn_step examples") {
  MmnParams p;
  p.dt = 0.01;
  CHECK(mmn_step(1.0, p, 0.0) == doctest::Approx(0.99));
  CHECK(mmn_step(-1.0, p, 0.0) == doctest::Approx(-1.0));
  CHECK(mmn_drift(1e-12, 1.0) == doctest::Approx(mmn_drift(-1e-12, 1.0)));
  CHECK(mmn_drift(0.0, 1.0) == -1.0);
  CHECK_THROWS_AS(mmn_step(NAN, p, 0.0), NumericError);
}

TEST_CASE("stationary density is continuous at zero") {
  for (double beta : {0.5, 1.0, 2.0}) {
    CHECK(mmn_density_unnormalized(0.0, beta) == 1.0);
    CHECK(mmn_density_unnormalized(1e-12, beta) == doctest::Approx(1.0));
  }
}

TEST_CASE("stationary tail against closed forms") {
  const double inf = std::numeric_limits<double>::infinity();
  for (double beta : {0.5, 1.0, 2.0}) {
    CHECK(mmn_stationary_tail(beta, -inf) == 1.0);
    CHECK(mmn_stationary_tail(beta, inf) == 0.0);
    CHECK(mmn_stationary_tail(beta, -40.0) == doctest::Approx(1.0));
    CHECK(mmn_stationary_tail(beta, 80.0) == doctest::Approx(0.0));
    const double p0 = mmn_stationary_tail(beta, 0.0);
    CHECK(p0 == doctest::Approx(p_positive(beta)).epsilon(1e-10));
    for (double x : {0.3, 1.0, 4.0}) {
      CHECK(mmn_stationary_tail(beta, x) / p0 ==
            doctest::Approx(std::exp(-beta * x)).epsilon(1e-10));
    }
  }
  // frozen 30-digit value of P(S > -1) at beta = 1
  CHECK(mmn_stationary_tail(1.0, -1.0) == doctest::Approx(0.538453928172229).epsilon(1e-10));
  CHECK(p_positive(1.0) == doctest::Approx(0.223361274798261).epsilon(1e-12));
}

TEST_CASE("stationary tail is non-increasing in [0, 1]") {
  double prev = 1.0;
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    const double p = mmn_stationary_tail(1.0, x);
    CHECK(p <= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("simulated M/M/N time averages match the stationary law") {
  MmnParams p;
  p.horizon = 1e4;
  p.seed = 21;
  const std::vector<double> upper{0.0, 1.0};
  const std::vector<double> lower{1.0};
  const auto sim = mmn_simulate(p, upper, lower);
  CHECK(std::abs(sim.p_positive.value - p_positive(1.0)) <= 3.0 * sim.p_positive.std_err);
  CHECK(sim.upper_tail[0].prob == sim.p_positive.value);
  const double exact_upper = mmn_stationary_tail(1.0, 1.0);
  CHECK(std::abs(sim.upper_tail[1].prob - exact_upper) <= 3.0 * sim.upper_tail[1].std_err);
  const double exact_lower = 1.0 - mmn_stationary_tail(1.0, -1.0);
  CHECK(std::abs(sim.lower_tail[0].prob - exact_lower) <= 3.0 * sim.lower_tail[0].std_err);
  CHECK(sim.crossed_zero);
  CHECK(sim.total_time == doctest::Approx(1e4));

  const auto fit = fit_lower_log_density(sim, 0.25, 3.5);
  CHECK(fit.quadratic == doctest::Approx(-0.5).epsilon(0.15));
  CHECK(fit.linear == doctest::Approx(1.0).epsilon(0.3));
}
