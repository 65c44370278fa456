#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/activity.hpp"

namespace citypulse {

inline constexpr std::chrono::seconds kWindowLength{15 * 60};
inline constexpr std::size_t kSlotsPerDay = 96;
inline constexpr std::size_t kBinsPerWeek = 7 * kSlotsPerDay;  // 672

/// Strict ISO-8601 UTC parser: "YYYY-MM-DDTHH:MM:SSZ" (a "+00:00" suffix is
/// also accepted). Returns nullopt on any deviation.
std::optional<Timestamp> parse_utc_timestamp(std::string_view text) noexcept;

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc_timestamp(Timestamp t);

/// Appends the formatted timestamp to `out` without allocating a temporary.
void append_utc_timestamp(std::string& out, Timestamp t);

/// Parses "YYYY-MM-DD" into a UTC midnight.
std::optional<std::chrono::sys_days> parse_date(std::string_view text) noexcept;
std::string format_date(std::chrono::sys_days d);

/// Checks whether `t` lies on a 15-minute boundary (minute in {0,15,30,45},
/// seconds zero).
constexpr bool is_window_aligned(Timestamp t) noexcept {
  const auto s = t.time_since_epoch().count();
  return s % kWindowLength.count() == 0;
}

/// The dense 15-minute window axis of a city period [start, end).
class WindowAxis {
 public:
  WindowAxis() = default;
  WindowAxis(Timestamp start, std::size_t size) : start_(start), size_(size) {}
  WindowAxis(std::chrono::sys_days period_start, std::chrono::sys_days period_end);

  Timestamp start() const noexcept { return start_; }
  Timestamp end() const noexcept { return at(size_); }
  std::size_t size() const noexcept { return size_; }

  Timestamp at(std::size_t index) const noexcept {
    return start_ + kWindowLength * static_cast<std::int64_t>(index);
  }

  /// Index of the window starting at `t`; nullopt when `t` is outside the
  /// axis or unaligned.
  std::optional<std::size_t> index_of(Timestamp t) const noexcept;

  /// First window index at or after `t`, clamped to [0, size].
  std::size_t lower_index(Timestamp t) const noexcept;

  friend bool operator==(const WindowAxis&, const WindowAxis&) = default;

 private:
  Timestamp start_{};
  std::size_t size_ = 0;
};

/// Local-time view of a window axis: weekday/slot bin, local day, local week.
///
/// Weeks start Monday 00:00 local time. On a fall-back transition the
/// repeated wall-clock slots are flagged anomalous and carry no profile bin;
/// slots skipped on a spring-forward day simply never occur.
class WindowCalendar {
 public:
  /// Throws std::invalid_argument if the zone cannot be loaded.
  WindowCalendar(const WindowAxis& axis, const std::string& timezone);

  const WindowAxis& axis() const noexcept { return axis_; }
  const std::string& timezone() const noexcept { return timezone_; }
  std::size_t size() const noexcept { return axis_.size(); }

  /// Wall-clock weekday/slot bin (0..671, Monday 00:00 = 0), defined for
  /// every window including anomalous ones.
  std::uint16_t wall_bin(std::size_t w) const noexcept { return wall_bin_[w]; }

  /// True for windows whose wall-clock slot is repeated by a DST transition.
  bool anomalous(std::size_t w) const noexcept { return anomalous_[w] != 0; }

  /// Profile bin, or -1 for anomalous windows.
  int bin(std::size_t w) const noexcept {
    return anomalous_[w] ? -1 : static_cast<int>(wall_bin_[w]);
  }

  /// Minute of the local day (0..1439).
  std::uint16_t local_minute(std::size_t w) const noexcept { return minute_[w]; }

  std::size_t day_index(std::size_t w) const noexcept { return day_[w]; }
  std::size_t week_index(std::size_t w) const noexcept { return week_[w]; }

  std::size_t num_weeks() const noexcept { return week_ids_.size(); }
  std::size_t num_days() const noexcept { return num_days_; }

  /// ISO week id ("2013-W52") of a local week index.
  const std::string& week_id(std::size_t week) const { return week_ids_[week]; }
  std::optional<std::size_t> find_week(std::string_view iso_week_id) const;

  /// Number of windows in the local week (672 for a full week away from DST
  /// transitions and period edges).
  std::size_t week_window_count(std::size_t week) const { return week_windows_[week]; }

  /// Number of local weeks fully covered by the axis (Monday 00:00 through
  /// Sunday 24:00 local).
  std::size_t full_week_count() const;
  bool is_full_week(std::size_t week) const { return week_full_[week] != 0; }

  /// Bin table shared with residual series.
  std::shared_ptr<const std::vector<std::int16_t>> bin_table() const { return bins_; }

 private:
  WindowAxis axis_;
  std::string timezone_;
  std::vector<std::uint16_t> wall_bin_;
  std::vector<std::uint8_t> anomalous_;
  std::vector<std::uint16_t> minute_;
  std::vector<std::uint32_t> day_;
  std::vector<std::uint32_t> week_;
  std::vector<std::string> week_ids_;
  std::vector<std::size_t> week_windows_;
  std::vector<std::uint8_t> week_full_;
  std::size_t num_days_ = 0;
  std::shared_ptr<std::vector<std::int16_t>> bins_;
};

}  // namespace citypulse
