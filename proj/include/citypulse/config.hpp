#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace citypulse {

struct BoundingBox {
  double lat_min = 0.0;
  double lon_min = 0.0;
  double lat_max = 0.0;
  double lon_max = 0.0;

  bool contains(double lat, double lon) const noexcept {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline constexpr double kDefaultCellSizeMeters = 500.0;

struct CityConfig {
  std::string city_id;
  BoundingBox bbox;
  double cell_size_m = kDefaultCellSizeMeters;
  std::chrono::sys_days period_start{};
  std::chrono::sys_days period_end{};  // exclusive
  std::string timezone = "UTC";

  /// Throws ValidationError when an invariant does not hold: ordered bbox,
  /// positive cell size, a period of at least one week, non-empty id.
  void validate() const;

  friend bool operator==(const CityConfig&, const CityConfig&) = default;
};

/// `city.json` codec. Keys: city_id, bbox [lat_min, lon_min, lat_max,
/// lon_max], cell_size_m, period_start, period_end, timezone.
CityConfig city_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CityConfig& config);

CityConfig load_city_config(const std::filesystem::path& path);

}  // namespace citypulse
