#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/config.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace fixtures {

using namespace std::chrono;
using citypulse::Timestamp;

inline Timestamp ts(const char* text) { return *citypulse::parse_utc_timestamp(text); }

// Two UTC weeks starting Monday 2013-04-01.
inline citypulse::CityConfig utc_city(int weeks = 2) {
  citypulse::CityConfig c;
  c.city_id = "testcity";
  c.bbox = {0.0, 0.0, 0.018, 0.018};
  c.cell_size_m = 1000.0;
  c.period_start = sys_days{year{2013} / April / 1};
  c.period_end = c.period_start + days{7 * weeks};
  c.timezone = "UTC";
  return c;
}

inline citypulse::WindowCalendar utc_calendar(int weeks = 2) {
  const auto c = utc_city(weeks);
  return citypulse::WindowCalendar(citypulse::WindowAxis(c.period_start, c.period_end), "UTC");
}

// Series with every window present and CALLS = f(window).
template <typename F>
citypulse::spatial::RegionSeries make_series(const std::string& id, std::size_t n, F f) {
  citypulse::spatial::RegionSeries s(id, n);
  for (std::size_t w = 0; w < n; ++w) {
    s.values[citypulse::ActivityType::Calls][w] = f(w);
    s.presence.set(w);
  }
  return s;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("citypulse-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixtures
