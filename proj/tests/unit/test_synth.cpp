#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "citypulse/error.hpp"
#include "citypulse/synth.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using namespace citypulse::synth;
using doctest::Approx;

namespace {

ScenarioSpec small_spec() {
  auto spec = default_scenario();
  spec.n_antennas = 30;
  spec.city.period_end = spec.city.period_start + std::chrono::days{14};
  spec.holidays.clear();
  spec.events.clear();
  return spec;
}

double mean(const Template& t) { return std::accumulate(t.begin(), t.end(), 0.0) / t.size(); }

double window_mass(const Template& t, int first_day, int last_day, double from_h, double to_h) {
  double s = 0.0;
  for (int d = first_day; d <= last_day; ++d) {
    for (int q = static_cast<int>(from_h * 4); q < static_cast<int>(to_h * 4); ++q) s += t[d * 96 + q];
  }
  return s;
}

}  // namespace

TEST_CASE("templates have mean one and a floor") {
  for (const auto& t : {business_template(), residential_template(), leisure_template(), uniform_template()}) {
    REQUIRE(t.size() == 672);
    CHECK(mean(t) == Approx(1.0));
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    CHECK(*lo >= kTemplateFloor * *hi - 1e-12);
  }
  const auto u = uniform_template();
  CHECK(*std::min_element(u.begin(), u.end()) == Approx(1.0));
}

TEST_CASE("business peaks on weekday working hours") {
  const auto b = business_template();
  const auto peak = static_cast<int>(std::max_element(b.begin(), b.end()) - b.begin());
  CHECK(peak / 96 < 5);
  CHECK(peak % 96 >= 9 * 4);
  CHECK(peak % 96 < 18 * 4);
  // Weekend mass is well below weekday mass.
  CHECK(window_mass(b, 5, 6, 0, 24) / 2 < 0.5 * window_mass(b, 0, 4, 0, 24) / 5);
}

TEST_CASE("leisure carries more weekend mass than residential, which peaks in the evening") {
  const auto l = leisure_template();
  const auto r = residential_template();
  CHECK(window_mass(l, 5, 6, 0, 24) / 2 > window_mass(l, 0, 4, 0, 24) / 5);
  CHECK(window_mass(r, 0, 4, 18, 24) > window_mass(r, 0, 4, 9, 15));
}

TEST_CASE("scenario validation") {
  auto spec = small_spec();
  spec.mix = {0.5, 0.5, 0.5, 0.0};
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = small_spec();
  spec.templates[0][ActivityType::Calls].assign(672, 0.0);
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = small_spec();
  spec.n_antennas = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  CHECK_NOTHROW(default_scenario().validate());
}

TEST_CASE("scenario json round-trips") {
  const auto spec = default_scenario();
  const auto j = to_json(spec);
  CHECK(to_json(scenario_from_json(j)) == j);
  const auto partial = scenario_from_json(nlohmann::json{{"n_antennas", 12}});
  CHECK(partial.n_antennas == 12);
  CHECK(partial.seed == spec.seed);
}

TEST_CASE("generation is deterministic and ordered by antenna then time") {
  const Generator a(small_spec()), b(small_spec());
  CHECK(a.antennas() == b.antennas());
  std::ostringstream sa, sb;
  a.write_activity(sa, 0, 30);
  b.write_activity(sb, 0, 30);
  CHECK(sa.str() == sb.str());

  std::vector<ActivityRecord> recs;
  a.generate_antenna(3, [&](const ActivityRecord& r) { recs.push_back(r); });
  REQUIRE(recs.size() == a.calendar().size());
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].window_start < recs[i].window_start);
  CHECK(recs[0].antenna_id == a.antennas()[3].antenna_id);

  auto other = small_spec();
  other.seed += 1;
  std::ostringstream so;
  Generator(other).write_activity(so, 0, 30);
  CHECK(so.str() != sa.str());
}

TEST_CASE("generated counts follow the expected rate") {
  auto spec = small_spec();
  spec.noise_sigma = 0.0;
  const Generator g(spec);
  double observed = 0.0, expected = 0.0;
  for (std::size_t ant = 0; ant < spec.n_antennas; ++ant) {
    std::size_t w = 0;
    g.generate_antenna(ant, [&](const ActivityRecord& r) {
      observed += static_cast<double>(r.calls());
      expected += g.expected(ant, w++, ActivityType::Calls);
    });
  }
  // Poisson total: relative error well under 1% at this volume.
  CHECK(observed / expected == Approx(1.0).epsilon(0.01));
}

TEST_CASE("event truth lands on the configured cell and span") {
  auto spec = small_spec();
  EventSpec e;
  e.cell = "1:1";
  e.start = spec.city.period_start + std::chrono::hours(30);
  e.duration = 6;
  e.amplitude = 5.0;
  spec.events.push_back(e);
  spec.n_antennas = 200;
  const Generator g(spec);
  REQUIRE(g.ground_truth().events.size() == 1);
  const auto& t = g.ground_truth().events[0];
  CHECK(t.region_id == "1:1");
  CHECK(t.start_index == 120);
  CHECK(t.end_index == 125);
}

TEST_CASE("write_scenario writes the input files") {
  fixtures::TempDir dir;
  auto spec = small_spec();
  spec.n_antennas = 5;
  write_scenario(spec, dir.path, 2);
  for (const char* f : {"city.json", "antennas.csv", "activity-000.csv", "activity-001.csv", "ground_truth.json"}) {
    CHECK(std::filesystem::exists(dir.path / f));
  }
}
