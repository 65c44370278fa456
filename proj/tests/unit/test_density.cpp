#include <doctest.h>

#include "citypulse/density.hpp"
#include "citypulse/error.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using namespace citypulse::density;
using doctest::Approx;

namespace {

struct Setup {
  CityConfig config = fixtures::utc_city(1);
  spatial::Grid grid = spatial::build_grid(config);
  WindowAxis axis{config.period_start, config.period_end};
  Period whole{config.period_start, config.period_end};
  CellSeries cells;

  spatial::RegionSeries& cell(const std::string& id) {
    return cells.try_emplace(id, id, axis.size()).first->second;
  }
  void put(const std::string& id, std::size_t w, ActivityType t, std::int64_t v) {
    auto& s = cell(id);
    s.values[t][w] = v;
    s.presence.set(w);
  }
};

}  // namespace

TEST_CASE("volume is the mean over present windows") {
  Setup s;
  s.put("0:0", 0, ActivityType::Calls, 2);
  s.put("0:0", 5, ActivityType::Calls, 4);
  const auto m = volume_map(s.cells, s.grid, ActivityType::Calls, s.whole, s.axis);
  CHECK(m.n_rows == 3);
  CHECK(m.n_cols == 3);
  REQUIRE(m.values.size() == 9);
  CHECK(*m.values[0] == Approx(3.0));
  CHECK(m.coverage[0] == 2);
  CHECK_FALSE(m.values[4]);  // no series
  CHECK(m.coverage[4] == 0);

  CHECK_THROWS_AS(volume_map(s.cells, s.grid, ActivityType::Calls,
                             {s.whole.start, s.whole.start}, s.axis),
                  ArgumentError);
}

TEST_CASE("volume over a split period is the coverage-weighted mean of the halves") {
  Setup s;
  for (std::size_t w = 0; w < 672; w += 3) s.put("1:2", w, ActivityType::Sms, std::int64_t(w % 11));
  const auto mid = s.whole.start + std::chrono::hours(50);
  const auto a = volume_map(s.cells, s.grid, ActivityType::Sms, {s.whole.start, mid}, s.axis);
  const auto b = volume_map(s.cells, s.grid, ActivityType::Sms, {mid, s.whole.end}, s.axis);
  const auto all = volume_map(s.cells, s.grid, ActivityType::Sms, s.whole, s.axis);
  const std::size_t i = 1 * 3 + 2;
  CHECK(a.coverage[i] + b.coverage[i] == all.coverage[i]);
  const double combined = (*a.values[i] * a.coverage[i] + *b.values[i] * b.coverage[i]) / all.coverage[i];
  CHECK(*all.values[i] == Approx(combined));
}

TEST_CASE("type ratios sum to one and pair ratio compares two counts") {
  Setup s;
  s.put("0:0", 0, ActivityType::Calls, 30);
  s.put("0:0", 0, ActivityType::Sms, 10);
  s.put("2:2", 1, ActivityType::Calls, 0);  // present, all zero

  const auto calls = ratio_map(s.cells, s.grid, ActivityType::Calls, s.whole, s.axis);
  CHECK(*calls.values[0] == Approx(0.75));
  CHECK_FALSE(calls.values[8]);

  double total = 0.0;
  for (auto t : kActivityTypes) total += *ratio_map(s.cells, s.grid, t, s.whole, s.axis).values[0];
  CHECK(total == Approx(1.0));

  const auto pair = pair_ratio_map(s.cells, s.grid, ActivityType::Calls, ActivityType::Sms, s.whole, s.axis);
  CHECK(*pair.values[0] == Approx(0.75));
  CHECK(pair.other == ActivityType::Sms);
  CHECK(pair.metric == Metric::PairRatio);
  const auto flipped = pair_ratio_map(s.cells, s.grid, ActivityType::Sms, ActivityType::Calls, s.whole, s.axis);
  CHECK(*flipped.values[0] + *pair.values[0] == Approx(1.0));
}

TEST_CASE("metric names") {
  CHECK(parse_metric("volume") == Metric::Volume);
  CHECK(parse_metric("ratio") == Metric::Ratio);
  CHECK(parse_metric("pair_ratio") == Metric::PairRatio);
  CHECK(to_string(Metric::PairRatio) == "pair_ratio");
  CHECK_THROWS_AS(parse_metric("density"), ArgumentError);
}
