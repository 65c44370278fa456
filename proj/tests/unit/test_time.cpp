#include <doctest.h>

#include "citypulse/time.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using fixtures::ts;

TEST_CASE("utc timestamps parse strictly and format back") {
  const auto t = parse_utc_timestamp("2013-04-01T00:15:00Z");
  REQUIRE(t);
  CHECK(format_utc_timestamp(*t) == "2013-04-01T00:15:00Z");
  CHECK(parse_utc_timestamp("2013-04-01T00:15:00+00:00") == t);
  CHECK_FALSE(parse_utc_timestamp("2013-04-01 00:15:00Z"));
  CHECK_FALSE(parse_utc_timestamp("2013-02-30T00:00:00Z"));
  CHECK_FALSE(parse_utc_timestamp("2013-04-01T24:00:00Z"));
  CHECK_FALSE(parse_utc_timestamp("2013-04-01T00:15:00"));
  CHECK(is_window_aligned(ts("2013-04-01T00:45:00Z")));
  CHECK_FALSE(is_window_aligned(ts("2013-04-01T00:07:00Z")));
}

TEST_CASE("window axis indexing") {
  const auto c = fixtures::utc_city(1);
  const WindowAxis axis(c.period_start, c.period_end);
  CHECK(axis.size() == 672);
  CHECK(axis.index_of(ts("2013-04-01T00:30:00Z")) == 2u);
  CHECK_FALSE(axis.index_of(ts("2013-04-08T00:00:00Z")));
  CHECK_FALSE(axis.index_of(ts("2013-03-31T23:45:00Z")));
  CHECK(axis.lower_index(ts("2013-04-01T00:20:00Z")) == 2u);
  CHECK(axis.lower_index(ts("2014-01-01T00:00:00Z")) == 672u);
}

TEST_CASE("utc calendar bins start on monday") {
  const auto cal = fixtures::utc_calendar(2);
  CHECK(cal.num_weeks() == 2);
  CHECK(cal.full_week_count() == 2);
  CHECK(cal.week_id(0) == "2013-W14");
  CHECK(cal.bin(0) == 0);
  CHECK(cal.bin(671) == 671);
  CHECK(cal.bin(672) == 0);
  CHECK(cal.week_index(672) == 1);
  CHECK(cal.day_index(96) == 1);
}

TEST_CASE("london calendar handles both dst transitions") {
  using namespace std::chrono;
  // 2013-03-31 spring forward, 2013-10-27 fall back.
  const sys_days start{year{2013} / March / 25};
  const sys_days end{year{2013} / November / 4};
  const WindowCalendar cal(WindowAxis(start, end), "Europe/London");

  const auto spring = *cal.find_week("2013-W13");
  CHECK(cal.week_window_count(spring) == 672 - 4);
  CHECK(cal.is_full_week(spring));

  const auto fall = *cal.find_week("2013-W43");
  CHECK(cal.week_window_count(fall) == 672 + 4);
  std::size_t anomalous = 0;
  for (std::size_t w = 0; w < cal.size(); ++w) anomalous += cal.anomalous(w) ? 1 : 0;
  CHECK(anomalous == 8);  // both passes through 01:00-02:00 local

  // 12:00 UTC in summer is 13:00 local.
  const auto summer = *cal.axis().index_of(fixtures::ts("2013-06-03T12:00:00Z"));
  CHECK(cal.bin(summer) == 13 * 4);
  CHECK(cal.local_minute(summer) == 13 * 60);
}

TEST_CASE("iso week ids across a year boundary") {
  using namespace std::chrono;
  const WindowCalendar cal(WindowAxis(sys_days{year{2013} / December / 23},
                                      sys_days{year{2014} / January / 6}),
                           "UTC");
  REQUIRE(cal.num_weeks() == 2);
  CHECK(cal.week_id(0) == "2013-W52");
  CHECK(cal.week_id(1) == "2014-W01");
}

TEST_CASE("unknown time zone is rejected") {
  CHECK_THROWS_AS(WindowCalendar(WindowAxis(fixtures::ts("2013-04-01T00:00:00Z"), 10), "Mars/Olympus"),
                  std::invalid_argument);
}
