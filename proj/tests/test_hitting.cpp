#include <cmath>
#include <vector>

#include "doctest.h"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/hitting.hpp"

using namespace jsqdiff;

namespace {

// Independent oracle: int_0^z exp(w^2/2) dw = sum_k z^{2k+1} / (2^k k! (2k+1)).
double ou_scale_series(double z) {
  double term = z;  // z^{2k+1} / (2^k k!)
  double sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    sum += term / (2 * k + 1);
    term *= z * z / (2.0 * (k + 1));
  }
  return sum;
}

}  // namespace

TEST_CASE("scale functions vanish at zero") {
  CHECK(scale_value(ScaleSpec::bm_drift(-1.0), 0.0) == 0.0);
  CHECK(scale_value(ScaleSpec::bm_drift(0.0), 0.0) == 0.0);
  CHECK(scale_value(ScaleSpec::ou(0.0), 0.0) == 0.0);
  CHECK(scale_value(ScaleSpec::ou(2.0), 0.0) == 0.0);
}

TEST_CASE("bm_drift scale function closed form") {
  CHECK(scale_value(ScaleSpec::bm_drift(-1.0), 1.0) == doctest::Approx(std::exp(1.0) - 1.0));
  CHECK(scale_value(ScaleSpec::bm_drift(0.0), 2.5) == 2.5);
  // continuity across the small-mu series branch
  const double z = 1.7;
  const double below = scale_value(ScaleSpec::bm_drift(0.9e-8), z);
  const double above = scale_value(ScaleSpec::bm_drift(1.1e-8), z);
  const auto exact = [z](long double mu) { return static_cast<double>(-std::expm1l(-mu * z) / mu); };
  CHECK(below == doctest::Approx(exact(0.9e-8L)).epsilon(1e-14));
  CHECK(above == doctest::Approx(exact(1.1e-8L)).epsilon(1e-7));
  CHECK(below == doctest::Approx(z).epsilon(1e-7));
}

TEST_CASE("OU scale function against the series oracle") {
  CHECK(scale_value(ScaleSpec::ou(0.0), 1.0) == doctest::Approx(1.19495766191023).epsilon(1e-12));
  for (double z : {-3.0, -0.4, 0.3, 2.0, 5.0}) {
    CHECK(scale_value(ScaleSpec::ou(0.0), z) == doctest::Approx(ou_scale_series(z)).epsilon(1e-10));
  }
  // shifted center: frozen from a 30-digit quadrature
  CHECK(scale_value(ScaleSpec::ou(0.5), -1.0) ==
        doctest::Approx(-1.79510421505647).epsilon(1e-10));
  CHECK_THROWS_AS(scale_value(ScaleSpec::ou(0.0), 60.0), NumericError);
}

TEST_CASE("hit_up_before_down examples") {
  CHECK(hit_up_before_down(ScaleSpec::bm_drift(0.0), {0.0, 2.0, -2.0}) == doctest::Approx(0.5));
  CHECK(hit_up_before_down(ScaleSpec::bm_drift(-1.0), {0.0, 1.0, -1.0}) ==
        doctest::Approx(0.268941421369995).epsilon(1e-12));

  // drift -beta from 0 towards y - 2B (up) or -B (down)
  const double beta = 1.0, B = 1.0;
  for (double y : {2.5, 3.0, 5.0}) {
    const double formula = (1.0 - std::exp(-beta * B)) /
                           (std::exp(beta * (y - 2.0 * B)) - std::exp(-beta * B));
    CHECK(hit_up_before_down(ScaleSpec::bm_drift(-beta), {0.0, y - 2.0 * B, -B}) ==
          doctest::Approx(formula).epsilon(1e-12));
    CHECK(formula >= q2_hit_lower_bound(beta, B, y));
  }
  // y = 2B: start sits on the up level
  CHECK(hit_up_before_down(ScaleSpec::bm_drift(-beta), {0.0, 0.0, -B}) == 1.0);
  CHECK(hit_up_before_down(ScaleSpec::bm_drift(-beta), {-B, 0.0, -B}) == 0.0);
}

TEST_CASE("hit query validation") {
  CHECK_THROWS_AS(hit_up_before_down(ScaleSpec::bm_drift(0.0), {0.0, -1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(hit_up_before_down(ScaleSpec::bm_drift(0.0), {3.0, 1.0, -1.0}), ConfigError);
  CHECK_THROWS_AS(hit_up_before_down(ScaleSpec::bm_drift(0.0), {0.0, NAN, -1.0}), ConfigError);
}

TEST_CASE("hit probability is monotone and interior") {
  for (const auto& spec : {ScaleSpec::bm_drift(-1.0), ScaleSpec::bm_drift(0.7), ScaleSpec::ou(0.0),
                           ScaleSpec::ou(-1.5)}) {
    double prev = 0.0;
    for (double start = -0.9; start < 1.0; start += 0.3) {
      const double p = hit_up_before_down(spec, {start, 1.0, -1.0});
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      CHECK(p > prev);
      prev = p;
    }
    double prev_up = 1.0;
    for (double up = 0.5; up < 3.0; up += 0.5) {
      const double p = hit_up_before_down(spec, {0.0, up, -1.0});
      CHECK(p < prev_up);
      prev_up = p;
    }
  }
}

TEST_CASE("bm_drift oracle matches direct Monte Carlo") {
  BmHitMcOptions opt;
  opt.paths = 20'000;
  opt.seed = 12;
  for (const HitQuery q : {HitQuery{0.0, 1.0, -1.0}, HitQuery{0.5, 1.0, -1.0}}) {
    const double exact = hit_up_before_down(ScaleSpec::bm_drift(-1.0), q);
    const auto mc = mc_bm_hit_up_before_down(-1.0, q, opt);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.std_err);
  }
  const auto mc0 = mc_bm_hit_up_before_down(0.5, {0.0, 0.5, -1.5}, opt);
  const double exact0 = hit_up_before_down(ScaleSpec::bm_drift(0.5), {0.0, 0.5, -1.5});
  CHECK(std::abs(mc0.value - exact0) <= 3.0 * mc0.std_err);
}

TEST_CASE("hit fraction over cycles") {
  std::vector<Cycle> cycles(4);
  cycles[0].max_q2 = 2.0;
  cycles[1].max_q2 = 3.5;
  cycles[2].max_q2 = 5.0;
  cycles[3].max_q2 = 2.2;
  cycles[0].min_q1 = -0.5;
  cycles[1].min_q1 = -2.5;
  cycles[2].min_q1 = -1.0;
  cycles[3].min_q1 = -3.1;
  CHECK(hit_fraction(cycles, HitTarget::q2_up(2.0)).value == 1.0);
  CHECK(hit_fraction(cycles, HitTarget::q2_up(3.0)).value == 0.5);
  CHECK(hit_fraction(cycles, HitTarget::q1_down(2.0)).value == 0.5);
  CHECK(hit_fraction(cycles, HitTarget::q1_down(3.0)).value == 0.25);
}

TEST_CASE("hitting before regeneration, beta = 1, B = 1") {
  DiffusionParams p;
  p.seed = 31;
  auto cfg = RegenConfig::for_params(p, 1.0);
  const std::vector<HitTarget> targets{HitTarget::q2_up(2.0), HitTarget::q2_up(3.0),
                                       HitTarget::q2_up(4.0), HitTarget::q1_down(2.0),
                                       HitTarget::q1_down(3.0), HitTarget::q1_down(4.0)};
  HitMcOptions opt;
  opt.cycles = 800;
  opt.replicas = 2;
  const auto est = mc_hit_before_regen(p, cfg, targets, opt);
  CHECK(est[0].value == 1.0);
  CHECK(est[1].value >= est[2].value);
  CHECK(est[2].value + 3.0 * est[2].std_err >= q2_hit_lower_bound(1.0, 1.0, 4.0));
  for (int i = 3; i < 6; ++i) {
    CHECK(est[i].value > 0.0);
    CHECK(est[i].value < 1.0);
  }
  CHECK(est[3].value > est[4].value);
  CHECK(est[4].value > est[5].value);

  CHECK_THROWS_AS(mc_hit_before_regen(p, cfg, std::vector{HitTarget::q2_up(1.5)}, opt),
                  ConfigError);
}
