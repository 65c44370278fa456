#include "citypulse/pipeline.hpp"

#include <algorithm>
#include <istream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "citypulse/codec.hpp"
#include "citypulse/error.hpp"
#include "citypulse/store.hpp"

namespace citypulse::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kCodeVersion = "citypulse 0.1.0";

namespace {

constexpr std::size_t kMetaErrorLimit = 100;

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(store::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json reject_json(const ingest::RejectReport& r) {
  json errors = json::array();
  for (std::size_t i = 0; i < r.errors.size() && i < kMetaErrorLimit; ++i) {
    errors.push_back({{"line", r.errors[i].line}, {"reason", r.errors[i].reason}});
  }
  return json{{"count", r.count}, {"errors", std::move(errors)}};
}

ingest::RejectReport reject_from_json(const json& j) {
  ingest::RejectReport r;
  for (const auto& e : j.at("errors")) {
    r.errors.push_back({e.at("line").get<std::size_t>(), e.at("reason").get<std::string>()});
  }
  r.count = j.at("count").get<std::size_t>();
  return r;
}

json types_json(const std::vector<ActivityType>& types) {
  json arr = json::array();
  for (const auto t : types) arr.push_back(std::string(to_string(t)));
  return arr;
}

json compute_options_json(const ComputeOptions& o) {
  return json{{"k", o.k},
              {"types", types_json(o.types)},
              {"exclude_weeks", o.exclude_weeks},
              {"seed", o.seed},
              {"detect",
               {{"threshold_z", o.detect.threshold_z},
                {"min_duration", o.detect.min_duration},
                {"merge_gap", o.detect.merge_gap},
                {"negative", o.detect.negative}}}};
}

json manifest_json(const CityData& city, const ComputedCity* computed) {
  json m{{"store_version", store::kStoreVersion},
         {"code_version", kCodeVersion},
         {"city_id", city.config.city_id},
         {"config", to_json(city.config)},
         {"inputs", city.report.input_digests}};
  m["compute"] = computed ? compute_options_json(computed->options) : json(nullptr);
  return m;
}

void write_series(store::StoreWriter& w, const CityData& city) {
  for (const auto* region : city.regions()) {
    for (const auto t : kActivityTypes) {
      w.write_json(series_path(region->region_id, t),
                   codec::series_to_json(*region, t, city.axis()));
    }
  }
  w.write_json("regions.json", regions_json(city));
}

void ensure_unique_region_ids(const std::vector<spatial::District>& districts) {
  std::set<std::string> seen;
  for (const auto& d : districts) {
    if (d.district_id == spatial::kCityRegionId || spatial::parse_cell_region_id(d.district_id)) {
      throw ValidationError("district id " + d.district_id + " collides with a region id");
    }
    if (!seen.insert(d.district_id).second) {
      throw ValidationError("duplicate district id " + d.district_id);
    }
  }
}

}  // namespace

InputFiles InputFiles::discover(const fs::path& data_dir, const std::optional<fs::path>& city) {
  if (!fs::is_directory(data_dir)) throw ValidationError("data directory not found: " + data_dir.string());
  InputFiles files;
  files.city = city ? *city : data_dir / "city.json";
  if (!fs::exists(files.city)) throw ValidationError("missing city config " + files.city.string());
  files.antennas = data_dir / "antennas.csv";
  if (!fs::exists(files.antennas)) throw ValidationError("missing " + files.antennas.string());
  if (fs::exists(data_dir / "activity.csv")) files.activity.push_back(data_dir / "activity.csv");
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("activity-") && name.ends_with(".csv")) files.activity.push_back(entry.path());
  }
  if (files.activity.empty()) throw ValidationError("no activity.csv or activity-*.csv in " + data_dir.string());
  std::sort(files.activity.begin(), files.activity.end());
  if (fs::exists(data_dir / "districts.geojson")) files.districts = data_dir / "districts.geojson";
  return files;
}

const spatial::RegionSeries* CityData::find_region(std::string_view region_id) const {
  const std::string id(region_id);
  if (id == spatial::kCityRegionId) return &series.city;
  if (const auto it = series.cells.find(id); it != series.cells.end()) return &it->second;
  if (const auto it = series.districts.find(id); it != series.districts.end()) return &it->second;
  return nullptr;
}

std::vector<const spatial::RegionSeries*> CityData::regions() const {
  std::vector<const spatial::RegionSeries*> out;
  for (const auto& [id, s] : series.cells) out.push_back(&s);
  for (const auto& [id, s] : series.districts) out.push_back(&s);
  out.push_back(&series.city);
  return out;
}

CityData prepare_city(CityConfig config, std::vector<spatial::District> districts,
                      std::vector<Antenna> antennas) {
  config.validate();
  ensure_unique_region_ids(districts);
  CityData city;
  city.grid = spatial::build_grid(config);
  try {
    city.calendar = std::make_shared<const WindowCalendar>(
        WindowAxis(config.period_start, config.period_end), config.timezone);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  city.table = spatial::assign_antennas(city.grid, districts, antennas);
  city.config = std::move(config);
  city.districts = std::move(districts);
  city.antennas = std::move(antennas);
  return city;
}

CityData ingest_city(const InputFiles& files) {
  IngestReport report;
  const auto config = load_city_config(files.city);
  report.input_digests[files.city.filename().string()] = store::sha256_file(files.city);

  std::vector<spatial::District> districts;
  if (files.districts) {
    districts = spatial::load_districts(*files.districts);
    report.input_digests[files.districts->filename().string()] = store::sha256_file(*files.districts);
  }

  ingest::AntennaParse antennas;
  {
    store::HashingFileBuf buf(files.antennas);
    std::istream in(&buf);
    antennas = ingest::parse_antennas(in, config.bbox);
    report.input_digests[files.antennas.filename().string()] = buf.finish();
  }
  report.antennas = std::move(antennas.rejected);
  report.antenna_rows = antennas.data_rows;
  spdlog::info("antennas: {} accepted, {} rejected", antennas.antennas.size(), report.antennas.count);

  auto city = prepare_city(config, std::move(districts), std::move(antennas.antennas));
  spatial::Aggregator agg(city.grid, city.table, city.districts, city.axis());
  const bool sharded = files.activity.size() > 1;
  for (const auto& path : files.activity) {
    store::HashingFileBuf buf(path);
    std::istream in(&buf);
    ingest::ActivityReader reader(in);
    ActivityRecord rec;
    while (reader.next(rec)) agg.add(rec);
    report.activity_rows += reader.data_rows();
    const auto name = path.filename().string();
    for (const auto& e : reader.rejected().errors) {
      report.activity.add(e.line, sharded ? name + ": " + e.reason : e.reason);
    }
    report.activity.count += reader.rejected().count - reader.rejected().errors.size();
    report.input_digests[name] = buf.finish();
    spdlog::info("{}: {} rows, {} rejected", name, reader.data_rows(), reader.rejected().count);
  }
  city.series = agg.finish();
  report.aggregate = city.series.report;
  city.report = std::move(report);
  return city;
}

CityData city_from_records(CityConfig config, std::vector<spatial::District> districts,
                           std::vector<Antenna> antennas,
                           const std::function<void(spatial::Aggregator&)>& feed) {
  auto city = prepare_city(std::move(config), std::move(districts), std::move(antennas));
  spatial::Aggregator agg(city.grid, city.table, city.districts, city.axis());
  feed(agg);
  city.series = agg.finish();
  city.report.aggregate = city.series.report;
  city.report.antenna_rows = city.antennas.size();
  return city;
}

ComputedCity compute_city(const CityData& city, const ComputeOptions& options) {
  if (options.types.empty()) throw ArgumentError("at least one activity type is required");
  ComputedCity out;
  out.options = options;
  const auto& cal = *city.calendar;
  for (const auto* region : city.regions()) {
    auto& r = out.regions[region->region_id];
    for (const auto t : kActivityTypes) {
      r.raw[t] = profiles::typical_week(*region, t, cal, options.exclude_weeks);
      r.normalized[t] = profiles::normalize(r.raw[t]);
      r.residuals[t] = profiles::residuals(*region, t, r.raw[t], cal);
      r.events[t] = events::detect(r.residuals[t], options.detect);
    }
  }

  clusters::ProfileTable table;
  for (const auto& [id, series] : city.series.cells) table[id] = out.regions.at(id).normalized;
  out.features = clusters::build_features(table, options.types);
  if (out.features.vectors.size() >= options.k && options.k > 0) {
    clusters::KMeansOptions km;
    km.k = options.k;
    km.seed = options.seed;
    auto model = clusters::kmeans(out.features.vectors, km);
    model.types = out.features.types;
    clusters::label_model(model);
    out.model = std::move(model);
  } else {
    spdlog::warn("only {} cells qualify for clustering with k = {}; no model built",
                 out.features.vectors.size(), options.k);
  }

  const density::Period period{city.axis().start(), city.axis().end()};
  for (const auto t : kActivityTypes) {
    out.volume[t] = density::volume_map(city.series.cells, city.grid, t, period, city.axis());
    out.ratio[t] = density::ratio_map(city.series.cells, city.grid, t, period, city.axis());
  }
  return out;
}

json meta_json(const CityData& city, const ComputedCity* computed) {
  const auto& cal = *city.calendar;
  json weeks = json::array();
  for (std::size_t w = 0; w < cal.num_weeks(); ++w) {
    weeks.push_back({{"week_id", cal.week_id(w)},
                     {"windows", cal.week_window_count(w)},
                     {"full", cal.is_full_week(w)}});
  }
  json meta{{"city_id", city.config.city_id},
            {"store_version", store::kStoreVersion},
            {"config", to_json(city.config)},
            {"grid",
             {{"n_rows", city.grid.n_rows()},
              {"n_cols", city.grid.n_cols()},
              {"cell_size_m", city.grid.cell_size_m()},
              {"occupied_cells", city.series.cells.size()}}},
            {"axis",
             {{"start", format_utc_timestamp(city.axis().start())},
              {"end", format_utc_timestamp(city.axis().end())},
              {"window_seconds", kWindowLength.count()},
              {"windows", city.axis().size()}}},
            {"weeks", std::move(weeks)},
            {"types", types_json({kActivityTypes.begin(), kActivityTypes.end()})},
            {"resolutions", {"15min", "hour", "day", "week"}},
            {"antennas", city.report.antenna_rows - city.report.antennas.count},
            {"ingest",
             {{"antenna_rows", city.report.antenna_rows},
              {"antennas_rejected", reject_json(city.report.antennas)},
              {"activity_rows", city.report.activity_rows},
              {"activity_rejected", reject_json(city.report.activity)},
              {"records", city.report.aggregate.records},
              {"unknown_antenna", city.report.aggregate.unknown_antenna},
              {"outside_period", city.report.aggregate.outside_period}}}};
  if (computed) {
    auto c = compute_options_json(computed->options);
    c["clustered_cells"] = computed->features.vectors.size();
    c["skipped_cells"] = computed->features.skipped;
    c["models"] = computed->model ? json::array({computed->model->k}) : json::array();
    meta["compute"] = std::move(c);
  } else {
    meta["compute"] = nullptr;
  }
  return meta;
}

json regions_json(const CityData& city) {
  json cells = json::array();
  for (const auto& [id, series] : city.series.cells) {
    const auto cell = *spatial::parse_cell_region_id(id);
    const auto b = city.grid.cell_bounds(cell);
    const auto [clat, clon] = city.grid.cell_center(cell);
    cells.push_back({{"region_id", id},
                     {"row", cell.row},
                     {"col", cell.col},
                     {"bounds", {b.lat_min, b.lon_min, b.lat_max, b.lon_max}},
                     {"center", {clat, clon}},
                     {"antennas", city.series.cell_antenna_counts[city.grid.flat_index(cell)]}});
  }
  json features = json::array();
  for (const auto& d : city.districts) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"district_id", d.district_id}, {"name", d.name}}},
                        {"geometry", codec::district_geometry(d)}});
  }
  const auto& bb = city.config.bbox;
  return json{{"city_id", city.config.city_id},
              {"cells", std::move(cells)},
              {"districts", {{"type", "FeatureCollection"}, {"features", std::move(features)}}},
              {"city",
               {{"region_id", spatial::kCityRegionId},
                {"bounds", {bb.lat_min, bb.lon_min, bb.lat_max, bb.lon_max}}}}};
}

fs::path write_ingest_store(const CityData& city, const fs::path& root) {
  store::StoreWriter w(root, city.config.city_id);
  write_series(w, city);
  w.write_json("meta.json", meta_json(city));
  w.commit(manifest_json(city, nullptr));
  return w.final_dir();
}

fs::path write_full_store(const CityData& city, const ComputedCity& computed, const fs::path& root) {
  store::StoreWriter w(root, city.config.city_id);
  write_series(w, city);
  std::string jsonl;
  for (const auto* region : city.regions()) {
    const auto& id = region->region_id;
    const auto& r = computed.regions.at(id);
    for (const auto t : kActivityTypes) {
      w.write_json(profile_path(id, t, false), codec::profile_to_json(id, t, r.raw[t]));
      w.write_json(profile_path(id, t, true), codec::profile_to_json(id, t, r.normalized[t]));
      w.write_json(residuals_path(id, t), codec::residuals_to_json(r.residuals[t]));
      w.write_json(events_path(id, t), codec::region_events_to_json(id, t, r.events[t]));
      for (const auto& e : r.events[t]) {
        jsonl += codec::event_to_json(e).dump();
        jsonl.push_back('\n');
      }
    }
  }
  w.write("events/events.jsonl", jsonl);
  if (computed.model) w.write_json(model_path(computed.model->k), codec::model_to_json(*computed.model));
  for (const auto t : kActivityTypes) {
    w.write_json(density_path(density::Metric::Volume, t), codec::density_to_json(computed.volume[t]));
    w.write_json(density_path(density::Metric::Ratio, t), codec::density_to_json(computed.ratio[t]));
  }
  w.write_json("meta.json", meta_json(city, &computed));
  w.commit(manifest_json(city, &computed));
  return w.final_dir();
}

fs::path build_store(const InputFiles& files, const ComputeOptions& options, const fs::path& root) {
  const auto city = ingest_city(files);
  const auto computed = compute_city(city, options);
  return write_full_store(city, computed, root);
}

CityData load_city(const fs::path& dir) {
  const auto manifest = parse_json_file(dir / "manifest.json");
  if (manifest.value("store_version", 0) != store::kStoreVersion) {
    throw ValidationError("unsupported store version in " + dir.string());
  }
  const auto meta = parse_json_file(dir / "meta.json");
  const auto regions = parse_json_file(dir / "regions.json");
  auto city = prepare_city(city_config_from_json(meta.at("config")),
                           spatial::parse_districts(regions.at("districts")), {});
  const auto n = city.axis().size();
  auto& series = city.series;
  series.cell_antenna_counts.assign(city.grid.cell_count(), 0);

  const auto load = [&](const std::string& id) {
    spatial::RegionSeries s(id, n);
    for (const auto t : kActivityTypes) {
      codec::series_from_json(parse_json_file(dir / series_path(id, t)), s, t, city.axis());
    }
    return s;
  };
  for (const auto& c : regions.at("cells")) {
    const auto id = c.at("region_id").get<std::string>();
    const auto cell = spatial::parse_cell_region_id(id);
    if (!cell || cell->row >= city.grid.n_rows() || cell->col >= city.grid.n_cols()) {
      throw ValidationError("regions.json: cell " + id + " is not on the grid");
    }
    series.cell_antenna_counts[city.grid.flat_index(*cell)] = c.at("antennas").get<std::size_t>();
    series.cells.emplace(id, load(id));
  }
  for (const auto& d : city.districts) series.districts.emplace(d.district_id, load(d.district_id));
  series.city = load(std::string(spatial::kCityRegionId));

  const auto& ing = meta.at("ingest");
  auto& report = city.report;
  report.antenna_rows = ing.at("antenna_rows").get<std::size_t>();
  report.antennas = reject_from_json(ing.at("antennas_rejected"));
  report.activity_rows = ing.at("activity_rows").get<std::size_t>();
  report.activity = reject_from_json(ing.at("activity_rejected"));
  report.aggregate.records = ing.at("records").get<std::size_t>();
  report.aggregate.unknown_antenna = ing.at("unknown_antenna").get<std::size_t>();
  report.aggregate.outside_period = ing.at("outside_period").get<std::size_t>();
  series.report = report.aggregate;
  report.input_digests = manifest.at("inputs").get<std::map<std::string, std::string>>();
  return city;
}

std::string series_path(std::string_view region_id, ActivityType type) {
  return "series/" + store::url_safe_key(region_id) + "__" + std::string(to_string(type)) + ".json";
}

std::string profile_path(std::string_view region_id, ActivityType type, bool normalized) {
  return "profiles/" + store::url_safe_key(region_id) + "__" + std::string(to_string(type)) +
         (normalized ? "__normalized.json" : "__raw.json");
}

std::string residuals_path(std::string_view region_id, ActivityType type) {
  return "residuals/" + store::url_safe_key(region_id) + "__" + std::string(to_string(type)) + ".json";
}

std::string events_path(std::string_view region_id, ActivityType type) {
  return "events/" + store::url_safe_key(region_id) + "__" + std::string(to_string(type)) + ".json";
}

std::string model_path(std::size_t k) { return "clusters/k" + std::to_string(k) + ".json"; }

std::string density_path(density::Metric metric, ActivityType type) {
  return "density/" + std::string(density::to_string(metric)) + "__" + std::string(to_string(type)) +
         ".json";
}

}  // namespace citypulse::pipeline
