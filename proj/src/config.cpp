#include "citypulse/config.hpp"

#include <fstream>

#include "citypulse/error.hpp"
#include "citypulse/time.hpp"

namespace citypulse {

void CityConfig::validate() const {
  if (city_id.empty()) throw ValidationError("city_id must not be empty");
  if (!(bbox.lat_min < bbox.lat_max) || !(bbox.lon_min < bbox.lon_max)) {
    throw ValidationError("bbox must satisfy lat_min < lat_max and lon_min < lon_max");
  }
  if (bbox.lat_min < -90.0 || bbox.lat_max > 90.0 || bbox.lon_min < -180.0 ||
      bbox.lon_max > 180.0) {
    throw ValidationError("bbox outside WGS84 range");
  }
  if (!(cell_size_m > 0.0)) throw ValidationError("cell_size_m must be positive");
  if (period_end - period_start < std::chrono::days{7}) {
    throw ValidationError("period must span at least one full week");
  }
  if (timezone.empty()) throw ValidationError("timezone must not be empty");
}

CityConfig city_config_from_json(const nlohmann::json& j) {
  CityConfig c;
  try {
    c.city_id = j.at("city_id").get<std::string>();
    const auto& b = j.at("bbox");
    if (!b.is_array() || b.size() != 4) throw ValidationError("bbox must be a 4-element array");
    c.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    c.cell_size_m = j.value("cell_size_m", kDefaultCellSizeMeters);
    const auto start = parse_date(j.at("period_start").get<std::string>());
    const auto end = parse_date(j.at("period_end").get<std::string>());
    if (!start || !end) throw ValidationError("period dates must be YYYY-MM-DD");
    c.period_start = *start;
    c.period_end = *end;
    c.timezone = j.value("timezone", std::string{"UTC"});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("city config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const CityConfig& c) {
  return nlohmann::json{
      {"city_id", c.city_id},
      {"bbox", {c.bbox.lat_min, c.bbox.lon_min, c.bbox.lat_max, c.bbox.lon_max}},
      {"cell_size_m", c.cell_size_m},
      {"period_start", format_date(c.period_start)},
      {"period_end", format_date(c.period_end)},
      {"timezone", c.timezone},
  };
}

CityConfig load_city_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open city config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("city config " + path.string() + ": " + e.what());
  }
  return city_config_from_json(j);
}

}  // namespace citypulse
