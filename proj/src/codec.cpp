#include "citypulse/codec.hpp"

#include <cmath>
#include <limits>

#include "citypulse/error.hpp"

namespace citypulse::codec {

using nlohmann::json;

namespace {

Timestamp timestamp_field(const json& j, const char* key) {
  const auto t = parse_utc_timestamp(j.at(key).get<std::string>());
  if (!t) throw ValidationError(std::string("bad timestamp in field ") + key);
  return *t;
}

ActivityType type_field(const json& j, const char* key) {
  const auto t = parse_activity_type(j.at(key).get<std::string>());
  if (!t) throw ValidationError(std::string("bad activity type in field ") + key);
  return *t;
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double from_nullable(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json ring_json(const spatial::Ring& ring) {
  auto arr = json::array();
  for (const auto& [lat, lon] : ring) arr.push_back({lon, lat});
  return arr;
}

json polygon_json(const spatial::Polygon& p) {
  auto rings = json::array();
  rings.push_back(ring_json(p.outer));
  for (const auto& h : p.holes) rings.push_back(ring_json(h));
  return rings;
}

}  // namespace

json series_to_json(const spatial::RegionSeries& series, ActivityType type, const WindowAxis& axis) {
  json values = json::array();
  const auto& v = series[type];
  values.get_ref<json::array_t&>().reserve(v.size());
  for (std::size_t w = 0; w < v.size(); ++w) {
    if (series.presence.test(w)) {
      values.push_back(v[w]);
    } else {
      values.push_back(nullptr);
    }
  }
  return json{{"region_id", series.region_id},
              {"activity", std::string(to_string(type))},
              {"start", format_utc_timestamp(axis.start())},
              {"window_seconds", kWindowLength.count()},
              {"values", std::move(values)}};
}

void series_from_json(const json& j, spatial::RegionSeries& series, ActivityType type,
                      const WindowAxis& axis) {
  const auto& values = j.at("values");
  if (timestamp_field(j, "start") != axis.start() || values.size() != axis.size() ||
      series.size() != axis.size()) {
    throw ValidationError("series export does not match the city window axis");
  }
  if (type_field(j, "activity") != type) throw ValidationError("series export has another type");
  series.region_id = j.at("region_id").get<std::string>();
  auto& out = series.values[type];
  for (std::size_t w = 0; w < values.size(); ++w) {
    if (values[w].is_null()) {
      out[w] = 0;
    } else {
      out[w] = values[w].get<std::int64_t>();
      series.presence.set(w);
    }
  }
}

json resampled_to_json(const std::string& region_id, ActivityType type,
                       const profiles::ResampledSeries& s) {
  json starts = json::array();
  json values = json::array();
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    starts.push_back(format_utc_timestamp(s.bin_start[i]));
    if (s.present[i] > 0) {
      values.push_back(s.values[i]);
    } else {
      values.push_back(nullptr);
    }
  }
  return json{{"region_id", region_id},
              {"activity", std::string(to_string(type))},
              {"resolution", std::string(profiles::to_string(s.resolution))},
              {"bin_start", std::move(starts)},
              {"values", std::move(values)},
              {"windows", s.windows},
              {"present", s.present}};
}

json profile_to_json(const std::string& region_id, ActivityType type,
                     const profiles::WeeklyProfile& p) {
  return json{{"region_id", region_id},
              {"activity", std::string(to_string(type))},
              {"normalized", p.normalized},
              {"values", p.values},
              {"support", p.support}};
}

profiles::WeeklyProfile profile_from_json(const json& j) {
  profiles::WeeklyProfile p;
  p.normalized = j.at("normalized").get<bool>();
  p.values = j.at("values").get<std::vector<double>>();
  p.support = j.at("support").get<std::vector<std::uint32_t>>();
  if (p.values.size() != kBinsPerWeek || p.support.size() != kBinsPerWeek) {
    throw ValidationError("profile export must hold 672 bins");
  }
  bool any_support = false;
  double sum = 0.0;
  for (std::size_t b = 0; b < kBinsPerWeek; ++b) {
    any_support = any_support || p.support[b] > 0;
    sum += p.values[b];
  }
  p.empty = !any_support || (p.normalized && sum == 0.0);
  return p;
}

json residuals_to_json(const profiles::ResidualSeries& r) {
  json values = json::array();
  values.get_ref<json::array_t&>().reserve(r.values.size());
  for (const double v : r.values) values.push_back(nullable(v));
  json sigma = json::array();
  for (const double v : r.sigma) sigma.push_back(nullable(v));
  return json{{"region_id", r.region_id},
              {"activity", std::string(to_string(r.type))},
              {"start", format_utc_timestamp(r.start)},
              {"window_seconds", kWindowLength.count()},
              {"values", std::move(values)},
              {"sigma", std::move(sigma)}};
}

profiles::ResidualSeries residuals_from_json(const json& j) {
  profiles::ResidualSeries r;
  r.region_id = j.at("region_id").get<std::string>();
  r.type = type_field(j, "activity");
  r.start = timestamp_field(j, "start");
  const auto& values = j.at("values");
  r.values.reserve(values.size());
  for (const auto& v : values) r.values.push_back(from_nullable(v));
  const auto& sigma = j.at("sigma");
  if (sigma.size() != kBinsPerWeek) throw ValidationError("residual sigma must hold 672 bins");
  for (std::size_t b = 0; b < kBinsPerWeek; ++b) r.sigma[b] = from_nullable(sigma[b]);
  return r;
}

json event_to_json(const events::EventReport& e) {
  return json{{"region_id", e.region_id},
              {"activity", std::string(to_string(e.type))},
              {"start", format_utc_timestamp(e.start_window)},
              {"end", format_utc_timestamp(e.end_window)},
              {"peak", format_utc_timestamp(e.peak_window)},
              {"start_index", e.start_index},
              {"end_index", e.end_index},
              {"peak_index", e.peak_index},
              {"duration", e.duration()},
              {"peak_z", e.peak_z},
              {"mean_z", e.mean_z}};
}

events::EventReport event_from_json(const json& j) {
  events::EventReport e;
  e.region_id = j.at("region_id").get<std::string>();
  e.type = type_field(j, "activity");
  e.start_window = timestamp_field(j, "start");
  e.end_window = timestamp_field(j, "end");
  e.peak_window = timestamp_field(j, "peak");
  e.start_index = j.at("start_index").get<std::size_t>();
  e.end_index = j.at("end_index").get<std::size_t>();
  e.peak_index = j.at("peak_index").get<std::size_t>();
  e.peak_z = j.at("peak_z").get<double>();
  e.mean_z = j.at("mean_z").get<double>();
  return e;
}

json region_events_to_json(const std::string& region_id, ActivityType type,
                           const std::vector<events::EventReport>& list) {
  json arr = json::array();
  for (const auto& e : list) arr.push_back(event_to_json(e));
  return json{{"region_id", region_id},
              {"activity", std::string(to_string(type))},
              {"events", std::move(arr)}};
}

json model_to_json(const clusters::ClusterModel& m) {
  json types = json::array();
  for (const auto t : m.types) types.push_back(std::string(to_string(t)));
  json labels = json::array();
  for (const auto l : m.labels) labels.push_back(std::string(clusters::to_string(l)));
  json assignment = json::object();
  for (std::size_t i = 0; i < m.region_ids.size(); ++i) {
    assignment[m.region_ids[i]] = m.assignment[i];
  }
  return json{{"k", m.k},
              {"seed", m.seed},
              {"types", std::move(types)},
              {"sse", m.sse},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"sse_history", m.sse_history},
              {"labels", std::move(labels)},
              {"centroids", m.centroids},
              {"assignment", std::move(assignment)}};
}

clusters::ClusterModel model_from_json(const json& j) {
  clusters::ClusterModel m;
  m.k = j.at("k").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("types")) {
    const auto parsed = parse_activity_type(t.get<std::string>());
    if (!parsed) throw ValidationError("model export has an unknown type");
    m.types.push_back(*parsed);
  }
  m.sse = j.at("sse").get<double>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.converged = j.at("converged").get<bool>();
  m.sse_history = j.at("sse_history").get<std::vector<double>>();
  for (const auto& l : j.at("labels")) {
    const auto name = l.get<std::string>();
    auto label = clusters::ClusterLabel::Other;
    for (const auto c : {clusters::ClusterLabel::Business, clusters::ClusterLabel::Residential,
                         clusters::ClusterLabel::Leisure}) {
      if (clusters::to_string(c) == name) label = c;
    }
    m.labels.push_back(label);
  }
  m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  for (const auto& [region, cluster] : j.at("assignment").items()) {
    m.region_ids.push_back(region);
    m.assignment.push_back(cluster.get<int>());
  }
  if (m.centroids.size() != m.k) throw ValidationError("model export: centroid count differs from k");
  return m;
}

json density_to_json(const density::DensityMap& map) {
  json values = json::array();
  for (const auto& v : map.values) {
    if (v) {
      values.push_back(*v);
    } else {
      values.push_back(nullptr);
    }
  }
  json j{{"metric", std::string(density::to_string(map.metric))},
         {"type", std::string(to_string(map.type))}};
  if (map.other) j["other"] = std::string(to_string(*map.other));
  j["period"] = {{"start", format_utc_timestamp(map.period.start)},
                 {"end", format_utc_timestamp(map.period.end)}};
  j["n_rows"] = map.n_rows;
  j["n_cols"] = map.n_cols;
  j["values"] = std::move(values);
  j["coverage"] = map.coverage;
  return j;
}

density::DensityMap density_from_json(const json& j) {
  density::DensityMap map;
  map.metric = density::parse_metric(j.at("metric").get<std::string>());
  map.type = type_field(j, "type");
  if (j.contains("other")) map.other = type_field(j, "other");
  map.period.start = timestamp_field(j.at("period"), "start");
  map.period.end = timestamp_field(j.at("period"), "end");
  map.n_rows = j.at("n_rows").get<int>();
  map.n_cols = j.at("n_cols").get<int>();
  for (const auto& v : j.at("values")) {
    if (v.is_null()) {
      map.values.emplace_back();
    } else {
      map.values.emplace_back(v.get<double>());
    }
  }
  map.coverage = j.at("coverage").get<std::vector<std::uint32_t>>();
  const auto cells = static_cast<std::size_t>(map.n_rows) * static_cast<std::size_t>(map.n_cols);
  if (map.values.size() != cells || map.coverage.size() != cells) {
    throw ValidationError("density export: array length differs from the grid");
  }
  return map;
}

json district_geometry(const spatial::District& d) {
  if (d.polygons.size() == 1) {
    return json{{"type", "Polygon"}, {"coordinates", polygon_json(d.polygons.front())}};
  }
  json polys = json::array();
  for (const auto& p : d.polygons) polys.push_back(polygon_json(p));
  return json{{"type", "MultiPolygon"}, {"coordinates", std::move(polys)}};
}

}  // namespace citypulse::codec
