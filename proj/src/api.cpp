#include "citypulse/api.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "citypulse/codec.hpp"
#include "citypulse/density.hpp"
#include "citypulse/error.hpp"
#include "citypulse/pipeline.hpp"
#include "citypulse/profiles.hpp"
#include "citypulse/store.hpp"

namespace citypulse::api {

namespace fs = std::filesystem;
using nlohmann::json;

struct ApiService::City {
  std::string id;
  fs::path dir;
  CityConfig config;
  spatial::Grid grid;
  std::shared_ptr<const WindowCalendar> calendar;
  std::set<std::string> regions;
  std::vector<std::string> cells;
  std::optional<std::size_t> default_k;
};

namespace {

// Thrown inside route handlers and turned into an error response.
struct ApiError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int status, std::string code, std::string message) {
  throw ApiError{status, std::move(code), std::move(message)};
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const auto slash = path.find('/', pos);
    const auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return parts;
}

std::optional<std::string> param(const Query& q, const std::string& key) {
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

ActivityType type_param(const Query& q, const std::string& key = "type") {
  const auto v = param(q, key);
  if (!v) return ActivityType::Calls;
  const auto t = parse_activity_type(*v);
  if (!t) fail(400, "invalid_parameter", "unknown activity type '" + *v + "'");
  return *t;
}

bool bool_param(const Query& q, const std::string& key) {
  const auto v = param(q, key);
  if (!v) return false;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  fail(400, "invalid_parameter", key + " must be true or false");
}

std::size_t count_param(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(400, "invalid_parameter", what + " must be a non-negative integer");
  }
  return v;
}

std::optional<Timestamp> time_param(const Query& q, const std::string& key) {
  const auto v = param(q, key);
  if (!v) return std::nullopt;
  if (const auto t = parse_utc_timestamp(*v)) return *t;
  if (const auto d = parse_date(*v)) return Timestamp{*d};
  fail(400, "invalid_parameter", key + " must be YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ");
}

// Window range [begin, end) selected by from/to; nullopt when neither is set.
std::optional<std::pair<std::size_t, std::size_t>> window_range(const WindowAxis& axis,
                                                                const Query& q) {
  const auto from = time_param(q, "from");
  const auto to = time_param(q, "to");
  if (!from && !to) return std::nullopt;
  const auto begin = from ? axis.lower_index(*from) : 0;
  const auto end = to ? axis.lower_index(*to) : axis.size();
  if (begin >= end) fail(400, "invalid_parameter", "from must precede to within the city period");
  return std::make_pair(begin, end);
}

Response json_response(const json& j) { return Response{200, j.dump()}; }

Response file_response(const fs::path& path, const char* missing_code, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(404, missing_code, what + " is not in the store");
  return Response{200, store::read_file(path)};
}

json load_json(const fs::path& path) { return json::parse(store::read_file(path)); }

spatial::RegionSeries load_series(const fs::path& dir, const WindowAxis& axis,
                                  const std::string& region, std::span<const ActivityType> types) {
  spatial::RegionSeries s(region, axis.size());
  for (const auto t : types) {
    codec::series_from_json(load_json(dir / pipeline::series_path(region, t)), s, t, axis);
  }
  return s;
}

}  // namespace

Response error_response(int status, std::string_view code, std::string_view message) {
  const json body{{"error", {{"code", code}, {"message", message}}},
                  {"store_version", store::kStoreVersion}};
  return Response{status, body.dump()};
}

ApiService::ApiService(const fs::path& store_root) : root_(store_root) {
  if (!fs::is_directory(root_)) throw std::runtime_error("store not found: " + root_.string());
  for (const auto& name : store::list_cities(root_)) {
    auto city = std::make_unique<City>();
    city->dir = root_ / name;
    const auto meta = load_json(city->dir / "meta.json");
    city->id = meta.at("city_id").get<std::string>();
    city->config = city_config_from_json(meta.at("config"));
    city->grid = spatial::build_grid(city->config);
    city->calendar = std::make_shared<const WindowCalendar>(
        WindowAxis(city->config.period_start, city->config.period_end), city->config.timezone);
    const auto regions = load_json(city->dir / "regions.json");
    for (const auto& c : regions.at("cells")) {
      city->cells.push_back(c.at("region_id").get<std::string>());
      city->regions.insert(city->cells.back());
    }
    for (const auto& f : regions.at("districts").at("features")) {
      city->regions.insert(f.at("properties").at("district_id").get<std::string>());
    }
    city->regions.insert(std::string(spatial::kCityRegionId));
    if (meta.contains("compute") && meta["compute"].is_object()) {
      city->default_k = meta["compute"].at("k").get<std::size_t>();
    }
    const auto id = city->id;
    cities_.emplace(id, std::move(city));
  }
  if (cities_.empty()) throw std::runtime_error("no built city under " + root_.string());
}

ApiService::~ApiService() = default;

std::vector<std::string> ApiService::city_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, c] : cities_) ids.push_back(id);
  return ids;
}

const ApiService::City* ApiService::find_city(const std::string& id) const {
  const auto it = cities_.find(id);
  return it == cities_.end() ? nullptr : it->second.get();
}

Response ApiService::handle(std::string_view path, const Query& query) const {
  try {
    const auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "cities") {
      fail(404, "not_found", "unknown path " + std::string(path));
    }
    if (parts.size() == 2) {
      json list = json::array();
      for (const auto& [id, c] : cities_) {
        list.push_back({{"city_id", id},
                        {"timezone", c->config.timezone},
                        {"period_start", format_date(c->config.period_start)},
                        {"period_end", format_date(c->config.period_end)},
                        {"computed", c->default_k.has_value()}});
      }
      return json_response({{"cities", std::move(list)}, {"store_version", store::kStoreVersion}});
    }
    const auto* city = find_city(parts[2]);
    if (city == nullptr) fail(404, "city_not_found", "no city '" + parts[2] + "'");
    return city_route(*city, parts, query);
  } catch (const ApiError& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const ArgumentError& e) {
    return error_response(400, "invalid_parameter", e.what());
  } catch (const std::exception& e) {
    spdlog::error("request {} failed: {}", path, e.what());
    return error_response(500, "internal_error", e.what());
  }
}

Response ApiService::city_route(const City& city, const std::vector<std::string>& parts,
                                const Query& query) const {
  if (parts.size() == 4 && parts[3] == "meta") {
    return file_response(city.dir / "meta.json", "not_found", "meta");
  }
  if (parts.size() >= 4 && parts[3] == "regions") {
    if (parts.size() == 4) return file_response(city.dir / "regions.json", "not_found", "regions");
    if (!city.regions.contains(parts[4])) {
      fail(404, "region_not_found", "no region '" + parts[4] + "' in " + city.id);
    }
    if (parts.size() == 6) return region_route(city, parts[4], parts[5], query);
  }
  if (parts.size() >= 4 && parts[3] == "clusters") return clusters_route(city, parts, query);
  if (parts.size() == 4 && parts[3] == "density") return density_route(city, query);
  fail(404, "not_found", "unknown resource");
}

Response ApiService::region_route(const City& city, const std::string& region,
                                  const std::string& view, const Query& query) const {
  const auto type = type_param(query);
  const auto& cal = *city.calendar;
  if (view == "series") {
    const auto res = profiles::parse_resolution(param(query, "res").value_or("15min"));
    const auto range = window_range(cal.axis(), query);
    if (res == profiles::Resolution::Min15 && !range) {
      return file_response(city.dir / pipeline::series_path(region, type), "not_found", "series");
    }
    const std::array<ActivityType, 1> types{type};
    const auto series = load_series(city.dir, cal.axis(), region, types);
    const auto begin = range ? range->first : 0;
    const auto end = range ? range->second : cal.size();
    return json_response(
        codec::resampled_to_json(region, type, profiles::resample(series, type, res, cal, begin, end)));
  }
  if (view == "typicalweek") {
    const bool normalized = bool_param(query, "normalized");
    return file_response(city.dir / pipeline::profile_path(region, type, normalized),
                         "profile_not_found", "profile");
  }
  if (view == "residuals") {
    return file_response(city.dir / pipeline::residuals_path(region, type), "residuals_not_found",
                         "residual series");
  }
  if (view == "events") {
    return file_response(city.dir / pipeline::events_path(region, type), "events_not_found",
                         "event list");
  }
  fail(404, "not_found", "unknown region view '" + view + "'");
}

Response ApiService::clusters_route(const City& city, const std::vector<std::string>& parts,
                                    const Query& query) const {
  if (parts.size() == 4) {
    std::size_t k = 0;
    if (const auto v = param(query, "k")) {
      k = count_param(*v, "k");
    } else if (city.default_k) {
      k = *city.default_k;
    } else {
      fail(404, "clusters_not_found", "no cluster model computed for " + city.id);
    }
    return file_response(city.dir / pipeline::model_path(k), "clusters_not_found",
                         "cluster model k=" + std::to_string(k));
  }
  if (parts.size() == 6 && parts[5] == "compare") {
    const auto k = count_param(parts[4], "k");
    const auto other_id = param(query, "other_city");
    if (!other_id) fail(400, "invalid_parameter", "other_city is required");
    const auto* other = find_city(*other_id);
    if (other == nullptr) fail(404, "city_not_found", "no city '" + *other_id + "'");
    const auto other_k = param(query, "other_k") ? count_param(*param(query, "other_k"), "other_k") : k;
    const auto path_a = city.dir / pipeline::model_path(k);
    const auto path_b = other->dir / pipeline::model_path(other_k);
    if (!fs::exists(path_a) || !fs::exists(path_b)) {
      fail(404, "clusters_not_found", "cluster model missing for one of the cities");
    }
    const auto a = codec::model_from_json(load_json(path_a));
    const auto b = codec::model_from_json(load_json(path_b));
    if (a.types != b.types || (!a.centroids.empty() && !b.centroids.empty() &&
                               a.centroids[0].size() != b.centroids[0].size())) {
      fail(400, "incompatible_models", "models were built over different feature layouts");
    }
    const auto cmp = clusters::compare_models(a, b);
    json matches = json::array();
    for (const auto& m : cmp.matches) {
      matches.push_back({{"a", m.a},
                         {"b", m.b},
                         {"distance", m.distance},
                         {"label_a", std::string(clusters::to_string(a.labels.at(m.a)))},
                         {"label_b", std::string(clusters::to_string(b.labels.at(m.b)))}});
    }
    return json_response({{"city", city.id},
                          {"other_city", other->id},
                          {"k", k},
                          {"other_k", other_k},
                          {"distances", cmp.distances},
                          {"matches", std::move(matches)},
                          {"store_version", store::kStoreVersion}});
  }
  fail(404, "not_found", "unknown clusters resource");
}

Response ApiService::density_route(const City& city, const Query& query) const {
  const auto metric = density::parse_metric(param(query, "metric").value_or("volume"));
  const auto type = type_param(query);
  const auto& axis = city.calendar->axis();
  auto range = window_range(axis, query);
  if (range && range->first == 0 && range->second == axis.size()) range.reset();
  if (metric != density::Metric::PairRatio && !range) {
    return file_response(city.dir / pipeline::density_path(metric, type), "density_not_found",
                         "density map");
  }
  std::vector<ActivityType> needed;
  std::optional<ActivityType> other;
  switch (metric) {
    case density::Metric::Volume:
      needed = {type};
      break;
    case density::Metric::Ratio:
      needed.assign(kActivityTypes.begin(), kActivityTypes.end());
      break;
    case density::Metric::PairRatio:
      if (!param(query, "other")) fail(400, "invalid_parameter", "pair_ratio needs other=TYPE");
      other = type_param(query, "other");
      needed = {type, *other};
      break;
  }
  density::CellSeries cells;
  for (const auto& id : city.cells) cells.emplace(id, load_series(city.dir, axis, id, needed));
  const density::Period period{axis.at(range ? range->first : 0),
                               axis.at(range ? range->second : axis.size())};
  density::DensityMap map;
  switch (metric) {
    case density::Metric::Volume:
      map = density::volume_map(cells, city.grid, type, period, axis);
      break;
    case density::Metric::Ratio:
      map = density::ratio_map(cells, city.grid, type, period, axis);
      break;
    case density::Metric::PairRatio:
      map = density::pair_ratio_map(cells, city.grid, type, *other, period, axis);
      break;
  }
  return json_response(codec::density_to_json(map));
}

bool serve(const ApiService& service, const ServeOptions& options) {
  httplib::Server server;
  const auto version = std::to_string(store::kStoreVersion);
  server.set_default_headers({{"X-Store-Version", version}});
  if (options.static_dir && !server.set_mount_point("/", options.static_dir->string())) {
    spdlog::error("cannot mount {}", options.static_dir->string());
    return false;
  }
  server.Get(R"(/api(/.*)?)", [&service](const httplib::Request& req, httplib::Response& res) {
    Query query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    auto out = service.handle(req.path, query);
    res.status = out.status;
    res.set_content(std::move(out.body), out.content_type);
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto out = error_response(res.status, res.status == 404 ? "not_found" : "http_error",
                                    "cannot serve " + req.path);
    res.set_content(out.body, out.content_type);
  });
  spdlog::info("serving {} cities on http://{}:{}", service.city_ids().size(), options.host,
               options.port);
  return server.listen(options.host, options.port);
}

}  // namespace citypulse::api
