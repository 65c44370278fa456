#include "citypulse/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "citypulse/error.hpp"

namespace citypulse::profiles {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string_view to_string(Resolution r) noexcept {
  switch (r) {
    case Resolution::Min15: return "15min";
    case Resolution::Hour: return "hour";
    case Resolution::Day: return "day";
    case Resolution::Week: return "week";
  }
  return "15min";
}

Resolution parse_resolution(std::string_view token) {
  if (token == "15min") return Resolution::Min15;
  if (token == "hour") return Resolution::Hour;
  if (token == "day") return Resolution::Day;
  if (token == "week") return Resolution::Week;
  throw ArgumentError("unknown resolution '" + std::string(token) + "'");
}

ResampledSeries resample(const spatial::RegionSeries& series, ActivityType type,
                         Resolution resolution, const WindowCalendar& calendar, std::size_t begin,
                         std::optional<std::size_t> end) {
  if (series.size() != calendar.size()) throw ArgumentError("series and calendar differ in length");
  const std::size_t stop = std::min(end.value_or(series.size()), series.size());
  ResampledSeries out;
  out.resolution = resolution;
  const auto& values = series[type];
  for (std::size_t w = begin; w < stop; ++w) {
    bool starts = w == begin;
    switch (resolution) {
      case Resolution::Min15: starts = true; break;
      case Resolution::Hour: starts = starts || calendar.local_minute(w) % 60 == 0; break;
      case Resolution::Day: starts = starts || calendar.day_index(w) != calendar.day_index(w - 1); break;
      case Resolution::Week:
        starts = starts || calendar.week_index(w) != calendar.week_index(w - 1);
        break;
    }
    if (starts) {
      out.bin_start.push_back(calendar.axis().at(w));
      out.values.push_back(0);
      out.windows.push_back(0);
      out.present.push_back(0);
    }
    out.values.back() += values[w];
    ++out.windows.back();
    if (series.presence.test(w)) ++out.present.back();
  }
  return out;
}

double WeeklyProfile::sum() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

WeeklyProfile typical_week(const spatial::RegionSeries& series, ActivityType type,
                           const WindowCalendar& calendar,
                           const std::set<std::string>& exclude_weeks) {
  if (series.size() != calendar.size()) throw ArgumentError("series and calendar differ in length");
  std::vector<std::uint8_t> excluded(calendar.num_weeks(), 0);
  for (const auto& id : exclude_weeks) {
    if (auto week = calendar.find_week(id)) excluded[*week] = 1;
  }
  std::vector<std::int64_t> sums(kBinsPerWeek, 0);
  WeeklyProfile p;
  const auto& values = series[type];
  for (std::size_t w = 0; w < series.size(); ++w) {
    if (!series.presence.test(w) || excluded[calendar.week_index(w)]) continue;
    const int b = calendar.bin(w);
    if (b < 0) continue;
    sums[static_cast<std::size_t>(b)] += values[w];
    ++p.support[static_cast<std::size_t>(b)];
  }
  bool any = false;
  for (std::size_t b = 0; b < kBinsPerWeek; ++b) {
    if (p.support[b] == 0) continue;
    any = true;
    p.values[b] = static_cast<double>(sums[b]) / static_cast<double>(p.support[b]);
  }
  p.empty = !any;
  return p;
}

WeeklyProfile normalize(const WeeklyProfile& profile) {
  if (profile.normalized) return profile;
  WeeklyProfile out = profile;
  out.normalized = true;
  const double total = profile.empty ? 0.0 : profile.sum();
  if (!(total > 0.0)) {
    out.empty = true;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  for (auto& v : out.values) v /= total;
  return out;
}

bool ResidualSeries::defined(std::size_t w) const noexcept { return !std::isnan(values[w]); }

double ResidualSeries::sigma_at(std::size_t w) const noexcept {
  const int b = (*bins)[w];
  return b < 0 ? kNaN : sigma[static_cast<std::size_t>(b)];
}

ResidualSeries residuals(const spatial::RegionSeries& series, ActivityType type,
                         const WeeklyProfile& profile, const WindowCalendar& calendar) {
  if (series.size() != calendar.size()) throw ArgumentError("series and calendar differ in length");
  if (profile.normalized) throw ArgumentError("residuals need a raw (unnormalized) profile");
  ResidualSeries r;
  r.region_id = series.region_id;
  r.type = type;
  r.start = calendar.axis().start();
  r.bins = calendar.bin_table();
  r.values.assign(series.size(), kNaN);
  const auto& values = series[type];

  std::vector<std::int64_t> sums(kBinsPerWeek, 0);
  std::vector<std::uint32_t> counts(kBinsPerWeek, 0);
  for (std::size_t w = 0; w < series.size(); ++w) {
    const int b = calendar.bin(w);
    if (b < 0 || !series.presence.test(w)) continue;
    const auto bin = static_cast<std::size_t>(b);
    sums[bin] += values[w];
    ++counts[bin];
    if (profile.support[bin] > 0) {
      r.values[w] = static_cast<double>(values[w]) - profile.values[bin];
    }
  }
  std::vector<double> sq(kBinsPerWeek, 0.0);
  for (std::size_t w = 0; w < series.size(); ++w) {
    const int b = calendar.bin(w);
    if (b < 0 || !series.presence.test(w)) continue;
    const auto bin = static_cast<std::size_t>(b);
    const double mean = static_cast<double>(sums[bin]) / counts[bin];
    const double d = static_cast<double>(values[w]) - mean;
    sq[bin] += d * d;
  }
  for (std::size_t b = 0; b < kBinsPerWeek; ++b) {
    r.sigma[b] = counts[b] < 2 ? kNaN : std::sqrt(sq[b] / (counts[b] - 1));
  }
  return r;
}

}  // namespace citypulse::profiles
