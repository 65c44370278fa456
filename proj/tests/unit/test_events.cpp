#include <doctest.h>

#include <cmath>
#include <random>

#include "citypulse/error.hpp"
#include "citypulse/events.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using namespace citypulse::events;
using doctest::Approx;

namespace {

// Residual series over n windows with unit sigma everywhere.
profiles::ResidualSeries unit_residuals(std::size_t n) {
  profiles::ResidualSeries r;
  r.region_id = "0:0";
  r.start = fixtures::ts("2013-04-01T00:00:00Z");
  r.values.assign(n, 0.0);
  r.sigma.assign(kBinsPerWeek, 1.0);
  auto bins = std::make_shared<std::vector<std::int16_t>>(n);
  for (std::size_t w = 0; w < n; ++w) (*bins)[w] = static_cast<std::int16_t>(w % kBinsPerWeek);
  r.bins = bins;
  return r;
}

void bump(profiles::ResidualSeries& r, std::size_t begin, std::size_t len, double z) {
  for (std::size_t w = begin; w < begin + len; ++w) r.values[w] = z;
}

}  // namespace

TEST_CASE("a single bump is reported with its span and peak") {
  auto r = unit_residuals(1344);
  bump(r, 100, 8, 10.0);
  r.values[103] = 12.0;
  const auto found = detect(r);
  REQUIRE(found.size() == 1);
  const auto& e = found[0];
  CHECK(e.start_index == 100);
  CHECK(e.end_index == 107);
  CHECK(e.duration() == 8);
  CHECK(e.peak_index == 103);
  CHECK(e.peak_z == Approx(12.0));
  CHECK(e.mean_z == Approx((7 * 10.0 + 12.0) / 8));
  CHECK(e.start_window == fixtures::ts("2013-04-02T01:00:00Z"));
  CHECK(e.end_window == fixtures::ts("2013-04-02T02:45:00Z"));
  CHECK(e.region_id == "0:0");
}

TEST_CASE("bumps within the merge gap join, farther ones do not") {
  auto r = unit_residuals(1344);
  bump(r, 100, 3, 6.0);
  bump(r, 105, 3, 6.0);  // gap of two windows
  bump(r, 200, 3, 6.0);
  bump(r, 206, 3, 6.0);  // gap of three
  const auto found = detect(r);
  REQUIRE(found.size() == 3);
  CHECK(found[0].start_index == 100);
  CHECK(found[0].end_index == 107);
  CHECK(found[1].start_index == 200);
  CHECK(found[2].start_index == 206);
}

TEST_CASE("short runs, undefined windows and drops") {
  auto r = unit_residuals(1344);
  r.values[50] = 9.0;  // one window, below min duration
  bump(r, 300, 4, -8.0);
  r.values[400] = NAN;
  r.values[401] = 9.0;
  CHECK(detect(r).empty());

  DetectOptions opt;
  opt.negative = true;
  const auto drops = detect(r, opt);
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].negative());
  CHECK(drops[0].peak_z == Approx(-8.0));

  opt.threshold_z = 0.0;
  CHECK_THROWS_AS(detect(r, opt), ArgumentError);
}

TEST_CASE("raising the threshold never adds events") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto r = unit_residuals(4 * 672);
  for (auto& v : r.values) v = noise(rng);
  for (int i = 0; i < 20; ++i) bump(r, 100 + 130 * static_cast<std::size_t>(i), 1 + i % 6, 3.0 + 0.4 * i);
  std::size_t covered_prev = r.values.size() + 1;
  for (double t = 2.0; t <= 12.0; t += 0.5) {
    DetectOptions opt;
    opt.threshold_z = t;
    std::size_t covered = 0;
    for (const auto& e : detect(r, opt)) covered += e.duration();
    CHECK(covered <= covered_prev);
    covered_prev = covered;
  }
}

TEST_CASE("shifting a bump shifts the event") {
  for (std::size_t shift : {0u, 1u, 37u, 671u}) {
    auto r = unit_residuals(2000);
    bump(r, 500 + shift, 5, 7.0);
    const auto found = detect(r);
    REQUIRE(found.size() == 1);
    CHECK(found[0].start_index == 500 + shift);
    CHECK(found[0].end_index == 504 + shift);
  }
}

TEST_CASE("gaussian noise rarely triggers") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto r = unit_residuals(40 * 672);
  for (auto& v : r.values) v = noise(rng);
  // P(|z| >= 4) is about 6e-5 per window; two in a row far less.
  CHECK(detect(r).size() <= 1);
}
