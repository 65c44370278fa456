#include "citypulse/activity.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace citypulse {

namespace {
constexpr std::array<std::string_view, kNumActivityTypes> kNames{
    "CALLS", "SMS", "DATA_DOWN", "DATA_UP", "DATA_REQUESTS"};
}

std::string_view to_string(ActivityType t) noexcept { return kNames[ordinal(t)]; }

std::optional<ActivityType> parse_activity_type(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kActivityTypes[i];
  }
  return std::nullopt;
}

std::vector<ActivityType> parse_activity_types(std::string_view list) {
  std::vector<ActivityType> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    auto token = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    if (token.empty()) continue;
    auto t = parse_activity_type(token);
    if (!t) throw std::invalid_argument("unknown activity type '" + std::string(token) + "'");
    out.push_back(*t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace citypulse
