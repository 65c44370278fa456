#include <doctest.h>

#include <cmath>
#include <random>

#include "citypulse/error.hpp"
#include "citypulse/profiles.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using namespace citypulse::profiles;
using doctest::Approx;

TEST_CASE("resample sums windows into hours and days") {
  const auto cal = fixtures::utc_calendar(1);
  const auto s = fixtures::make_series("0:0", 672, [](std::size_t w) { return std::int64_t(w % 4 + 1); });
  const auto hours = resample(s, ActivityType::Calls, Resolution::Hour, cal);
  REQUIRE(hours.values.size() == 168);
  CHECK(hours.values[0] == 10);  // 1 + 2 + 3 + 4
  CHECK(hours.windows[0] == 4);
  CHECK(hours.present[0] == 4);
  CHECK(hours.bin_start[1] == fixtures::ts("2013-04-01T01:00:00Z"));

  const auto id = resample(s, ActivityType::Calls, Resolution::Min15, cal);
  CHECK(id.values == s[ActivityType::Calls]);

  const auto days = resample(s, ActivityType::Calls, Resolution::Day, cal);
  REQUIRE(days.values.size() == 7);
  for (auto v : days.values) CHECK(v == 240);
  const auto weeks = resample(s, ActivityType::Calls, Resolution::Week, cal);
  REQUIRE(weeks.values.size() == 1);
  CHECK(weeks.values[0] == 1680);
  CHECK_THROWS_AS(parse_resolution("minute"), ArgumentError);
}

TEST_CASE("resample counts absent windows separately") {
  const auto cal = fixtures::utc_calendar(1);
  spatial::RegionSeries s("0:0", 672);
  s.values[ActivityType::Calls][5] = 9;
  s.presence.set(5);
  const auto hours = resample(s, ActivityType::Calls, Resolution::Hour, cal);
  CHECK(hours.present[0] == 0);
  CHECK(hours.present[1] == 1);
  CHECK(hours.values[1] == 9);
}

TEST_CASE("local days on a dst change hold 92 or 100 windows") {
  using namespace std::chrono;
  const WindowCalendar cal(WindowAxis(sys_days{year{2013} / October / 21}, sys_days{year{2013} / October / 28}),
                           "Europe/London");
  const auto s = fixtures::make_series("c", cal.size(), [](std::size_t) { return std::int64_t{1}; });
  const auto days = resample(s, ActivityType::Calls, Resolution::Day, cal);
  // Period starts at local 01:00 BST, so the first day is partial.
  CHECK(days.windows.front() == 96 - 4);
  CHECK(days.windows.back() == 100);
  std::int64_t total = 0;
  for (auto v : days.values) total += v;
  CHECK(total == static_cast<std::int64_t>(cal.size()));
}

TEST_CASE("typical week averages across weeks") {
  const auto cal = fixtures::utc_calendar(2);
  const auto s = fixtures::make_series("0:0", 1344, [](std::size_t w) {
    const auto b = static_cast<std::int64_t>(w % 672);
    return w < 672 ? b : 3 * b;
  });
  const auto p = typical_week(s, ActivityType::Calls, cal);
  for (std::size_t b = 0; b < 672; ++b) {
    REQUIRE(p.values[b] == Approx(2.0 * static_cast<double>(b)));
    REQUIRE(p.support[b] == 2);
  }
  CHECK_FALSE(p.normalized);

  const auto only_first = typical_week(s, ActivityType::Calls, cal, {"2013-W15"});
  CHECK(only_first.values[100] == Approx(100.0));
  CHECK(only_first.support[100] == 1);
}

TEST_CASE("typical week of a single week is the week itself") {
  const auto cal = fixtures::utc_calendar(1);
  std::mt19937_64 rng(1);
  const auto s = fixtures::make_series("x", 672, [&](std::size_t) { return std::int64_t(rng() % 500); });
  const auto p = typical_week(s, ActivityType::Calls, cal);
  for (std::size_t b = 0; b < 672; ++b) REQUIRE(p.values[b] == double(s[ActivityType::Calls][b]));
}

TEST_CASE("unsupported bins stay zero and other bins are unaffected by removing presence") {
  const auto cal = fixtures::utc_calendar(2);
  auto s = fixtures::make_series("0:0", 1344, [](std::size_t w) { return std::int64_t(w % 97); });
  const auto before = typical_week(s, ActivityType::Calls, cal);

  spatial::RegionSeries holes("0:0", 1344);
  holes.values = s.values;
  for (std::size_t w = 0; w < 1344; ++w) {
    if (w % 672 != 10) holes.presence.set(w);
  }
  const auto after = typical_week(holes, ActivityType::Calls, cal);
  CHECK(after.support[10] == 0);
  CHECK(after.values[10] == 0.0);
  for (std::size_t b = 0; b < 672; ++b) {
    if (b != 10) REQUIRE(after.values[b] == before.values[b]);
  }
}

TEST_CASE("normalize") {
  WeeklyProfile p;
  p.values[0] = 1.0;
  p.values[1] = 3.0;
  const auto n = normalize(p);
  CHECK(n.normalized);
  CHECK(n.values[0] == Approx(0.25));
  CHECK(n.values[1] == Approx(0.75));
  CHECK(n.sum() == Approx(1.0));

  const auto z = normalize(WeeklyProfile{});
  CHECK(z.empty);
  CHECK(z.sum() == 0.0);

  // Scaling the input does not change the shape.
  WeeklyProfile q = p;
  for (auto& v : q.values) v *= 17.0;
  const auto nq = normalize(q);
  for (std::size_t b = 0; b < 672; ++b) REQUIRE(nq.values[b] == Approx(n.values[b]));
}

TEST_CASE("residuals and per-bin sigma") {
  const auto cal = fixtures::utc_calendar(2);
  const auto s = fixtures::make_series("0:0", 1344, [](std::size_t w) { return std::int64_t(w < 672 ? 1 : 3); });
  const auto p = typical_week(s, ActivityType::Calls, cal);
  const auto r = residuals(s, ActivityType::Calls, p, cal);
  REQUIRE(r.values.size() == 1344);
  CHECK(r.values[0] == Approx(-1.0));
  CHECK(r.values[700] == Approx(1.0));
  CHECK(r.sigma[0] == Approx(std::sqrt(2.0)));
  CHECK(r.sigma_at(700) == Approx(std::sqrt(2.0)));
  CHECK(r.defined(0));
}

TEST_CASE("residuals are undefined for absent windows and single-occurrence bins") {
  const auto cal = fixtures::utc_calendar(1);
  spatial::RegionSeries s("0:0", 672);
  s.presence.set(3);
  s.values[ActivityType::Calls][3] = 4;
  const auto p = typical_week(s, ActivityType::Calls, cal);
  const auto r = residuals(s, ActivityType::Calls, p, cal);
  CHECK_FALSE(r.defined(0));
  CHECK(std::isnan(r.values[0]));
  CHECK(r.values[3] == 0.0);
  CHECK(std::isnan(r.sigma[3]));
}

TEST_CASE("a perfectly periodic series has zero residuals and a stable profile under tiling") {
  const auto cal1 = fixtures::utc_calendar(1);
  const auto cal4 = fixtures::utc_calendar(4);
  auto f = [](std::size_t w) { return std::int64_t((w % 672) * 7 % 31); };
  const auto one = fixtures::make_series("c", 672, f);
  const auto four = fixtures::make_series("c", 4 * 672, f);
  const auto p1 = typical_week(one, ActivityType::Calls, cal1);
  const auto p4 = typical_week(four, ActivityType::Calls, cal4);
  for (std::size_t b = 0; b < 672; ++b) REQUIRE(p1.values[b] == Approx(p4.values[b]));
  const auto r = residuals(four, ActivityType::Calls, p4, cal4);
  for (double v : r.values) REQUIRE(v == Approx(0.0));
}
