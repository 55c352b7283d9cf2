#include <cmath>

#include "doctest.h"
#include "jsqdiff/errors.hpp"
#include "jsqdiff/stats.hpp"

using namespace jsqdiff;

TEST_CASE("running stats merge matches sequential accumulation") {
  RunningStats all, left, right;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(0.37 * i) * 3.0 + i * 0.01;
    all.add(x);
    (i < 37 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == all.count());
  CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("binomial estimate") {
  const auto e = binomial_estimate(25, 100);
  CHECK(e.value == 0.25);
  CHECK(e.std_err == doctest::Approx(std::sqrt(0.25 * 0.75 / 100)));
  CHECK_THROWS_AS(binomial_estimate(0, 0), InsufficientDataError);
}

TEST_CASE("batch means splits durations across batch boundaries") {
  BatchMeans bm(1.0);
  bm.add(1.0, 0.5);
  bm.add(3.0, 1.0);  // straddles the first boundary
  bm.add(0.0, 1.5);
  CHECK(bm.total_time() == doctest::Approx(3.0));
  CHECK(bm.mean() == doctest::Approx(3.5 / 3.0));
  CHECK(bm.batches() == 3);
  // batches: (0.5 + 1.5)/1, (1.5 + 0)/1, 0
  RunningStats expect;
  expect.add(2.0);
  expect.add(1.5);
  expect.add(0.0);
  CHECK(bm.std_err() == doctest::Approx(expect.std_err()));
}
