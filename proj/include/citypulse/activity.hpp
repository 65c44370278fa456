#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citypulse {

/// The five activity counters carried by every record. The ordinal order is
/// stable and is used for feature concatenation and ratio maps.
enum class ActivityType : std::uint8_t {
  Calls = 0,
  Sms = 1,
  DataDown = 2,
  DataUp = 3,
  DataRequests = 4,
};

inline constexpr std::size_t kNumActivityTypes = 5;

inline constexpr std::array<ActivityType, kNumActivityTypes> kActivityTypes{
    ActivityType::Calls, ActivityType::Sms, ActivityType::DataDown,
    ActivityType::DataUp, ActivityType::DataRequests};

constexpr std::size_t ordinal(ActivityType t) noexcept {
  return static_cast<std::size_t>(t);
}

/// Upper-case wire name, e.g. "CALLS" or "DATA_DOWN".
std::string_view to_string(ActivityType t) noexcept;

std::optional<ActivityType> parse_activity_type(std::string_view name) noexcept;

/// Parses a comma-separated list such as "CALLS,SMS". Throws
/// std::invalid_argument on an unknown name. The result is sorted into
/// ordinal order with duplicates removed.
std::vector<ActivityType> parse_activity_types(std::string_view list);

/// Per-type values indexed by ActivityType.
template <typename T>
struct PerType {
  std::array<T, kNumActivityTypes> v{};

  T& operator[](ActivityType t) noexcept { return v[ordinal(t)]; }
  const T& operator[](ActivityType t) const noexcept { return v[ordinal(t)]; }

  friend bool operator==(const PerType&, const PerType&) = default;
};

using Counters = PerType<std::int64_t>;

using Timestamp = std::chrono::sys_seconds;

/// One antenna, one 15-minute window, five counters.
struct ActivityRecord {
  std::string antenna_id;
  Timestamp window_start{};
  Counters counts{};

  std::int64_t calls() const noexcept { return counts[ActivityType::Calls]; }
  std::int64_t sms() const noexcept { return counts[ActivityType::Sms]; }
  std::int64_t data_down() const noexcept { return counts[ActivityType::DataDown]; }
  std::int64_t data_up() const noexcept { return counts[ActivityType::DataUp]; }
  std::int64_t data_requests() const noexcept {
    return counts[ActivityType::DataRequests];
  }

  friend bool operator==(const ActivityRecord&, const ActivityRecord&) = default;
};

struct Antenna {
  std::string antenna_id;
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Antenna&, const Antenna&) = default;
};

}  // namespace citypulse
