#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace citypulse::profiles {

enum class Resolution { Min15, Hour, Day, Week };

std::string_view to_string(Resolution r) noexcept;

/// Accepts "15min", "hour", "day", "week"; throws ArgumentError otherwise.
Resolution parse_resolution(std::string_view token);

struct ResampledSeries {
  Resolution resolution = Resolution::Min15;
  std::vector<Timestamp> bin_start;   // UTC start of each bin
  std::vector<std::int64_t> values;   // sum over the bin's windows
  std::vector<std::uint32_t> windows; // windows per bin (92/96/100 on DST days)
  std::vector<std::uint32_t> present; // present windows per bin; 0 = absent bin
};

/// Sums consecutive windows into calendar bins. Hours group four windows
/// starting at a local full hour; days and weeks follow the local calendar.
/// Bins at the period edges may be partial.
ResampledSeries resample(const spatial::RegionSeries& series, ActivityType type,
                         Resolution resolution, const WindowCalendar& calendar,
                         std::size_t begin = 0, std::optional<std::size_t> end = std::nullopt);

/// 672-bin typical week. `support[b]` counts the occurrences averaged into
/// bin b; bins without support are 0.
struct WeeklyProfile {
  std::vector<double> values = std::vector<double>(kBinsPerWeek, 0.0);
  std::vector<std::uint32_t> support = std::vector<std::uint32_t>(kBinsPerWeek, 0);
  bool normalized = false;
  bool empty = false;

  double sum() const noexcept;
};

/// Per-bin mean over present, non-anomalous windows of the non-excluded
/// local weeks. An all-empty result is flagged rather than thrown.
/// Unknown ids in `exclude_weeks` are ignored.
WeeklyProfile typical_week(const spatial::RegionSeries& series, ActivityType type,
                           const WindowCalendar& calendar,
                           const std::set<std::string>& exclude_weeks = {});

/// L1 normalization. A zero-sum or empty profile comes back flagged empty
/// with all-zero values.
WeeklyProfile normalize(const WeeklyProfile& profile);

struct ResidualSeries {
  std::string region_id;
  ActivityType type = ActivityType::Calls;
  Timestamp start{};
  /// observed - expected per window; NaN where the window is absent,
  /// anomalous, or its bin has no support.
  std::vector<double> values;
  /// Per-bin sample standard deviation (n-1) of the observed values; NaN
  /// where fewer than two occurrences exist.
  std::vector<double> sigma = std::vector<double>(kBinsPerWeek, 0.0);
  /// Window -> bin map (-1 for anomalous windows), shared with the calendar.
  std::shared_ptr<const std::vector<std::int16_t>> bins;

  bool defined(std::size_t w) const noexcept;
  double sigma_at(std::size_t w) const noexcept;
};

/// Residuals against a raw typical-week profile.
ResidualSeries residuals(const spatial::RegionSeries& series, ActivityType type,
                         const WeeklyProfile& profile, const WindowCalendar& calendar);

}  // namespace citypulse::profiles
