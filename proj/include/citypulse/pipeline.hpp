#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citypulse/activity.hpp"
#include "citypulse/clusters.hpp"
#include "citypulse/config.hpp"
#include "citypulse/density.hpp"
#include "citypulse/events.hpp"
#include "citypulse/ingest.hpp"
#include "citypulse/profiles.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace citypulse::pipeline {

/// Version string recorded in store manifests.
extern const char* const kCodeVersion;

struct InputFiles {
  std::filesystem::path city;
  std::filesystem::path antennas;
  std::vector<std::filesystem::path> activity;  // activity.csv or sorted activity-*.csv
  std::optional<std::filesystem::path> districts;

  /// Finds the ingest files in a data directory. `city` overrides the
  /// city.json location. Throws ValidationError when a file is missing.
  static InputFiles discover(const std::filesystem::path& data_dir,
                             const std::optional<std::filesystem::path>& city = std::nullopt);
};

struct IngestReport {
  ingest::RejectReport antennas;
  ingest::RejectReport activity;
  std::size_t antenna_rows = 0;
  std::size_t activity_rows = 0;
  spatial::AggregateReport aggregate;
  std::map<std::string, std::string> input_digests;  // file name -> SHA-256
};

struct CityData {
  CityConfig config;
  spatial::Grid grid;
  std::shared_ptr<const WindowCalendar> calendar;
  std::vector<spatial::District> districts;
  std::vector<Antenna> antennas;
  spatial::AssignmentTable table;
  spatial::AggregatedSeries series;
  IngestReport report;

  const WindowAxis& axis() const noexcept { return calendar->axis(); }
  const spatial::RegionSeries* find_region(std::string_view region_id) const;
  /// Cells (by id), then districts (by id), then the city.
  std::vector<const spatial::RegionSeries*> regions() const;
};

/// Validated config, grid, calendar and antenna assignment without series.
CityData prepare_city(CityConfig config, std::vector<spatial::District> districts,
                      std::vector<Antenna> antennas);

/// Parses, validates and aggregates the ingest files. Input digests are
/// computed while reading. Throws ValidationError on malformed headers,
/// invalid geometry or duplicate (antenna, window) records.
CityData ingest_city(const InputFiles& files);

/// Aggregates records pushed by `feed` (for in-memory scenarios).
CityData city_from_records(CityConfig config, std::vector<spatial::District> districts,
                           std::vector<Antenna> antennas,
                           const std::function<void(spatial::Aggregator&)>& feed);

struct ComputeOptions {
  std::size_t k = 5;
  std::vector<ActivityType> types{kActivityTypes.begin(), kActivityTypes.end()};
  std::set<std::string> exclude_weeks;
  std::uint64_t seed = 42;
  events::DetectOptions detect;
};

struct RegionResults {
  PerType<profiles::WeeklyProfile> raw;
  PerType<profiles::WeeklyProfile> normalized;
  PerType<profiles::ResidualSeries> residuals;
  PerType<std::vector<events::EventReport>> events;
};

struct ComputedCity {
  ComputeOptions options;
  std::map<std::string, RegionResults> regions;
  clusters::FeatureSet features;
  std::optional<clusters::ClusterModel> model;  // absent when fewer than k cells qualify
  PerType<density::DensityMap> volume;
  PerType<density::DensityMap> ratio;
};

/// Profiles, residuals and events for every region; clusters over cells;
/// full-period density maps.
ComputedCity compute_city(const CityData& city, const ComputeOptions& options);

nlohmann::json meta_json(const CityData& city, const ComputedCity* computed = nullptr);
nlohmann::json regions_json(const CityData& city);

/// Writes series, regions, meta and manifest. The previous city directory,
/// if any, is replaced atomically.
std::filesystem::path write_ingest_store(const CityData& city, const std::filesystem::path& root);

/// Writes every artifact of an ingested and computed city.
std::filesystem::path write_full_store(const CityData& city, const ComputedCity& computed,
                                       const std::filesystem::path& root);

/// Ingest, compute and persist in one step.
std::filesystem::path build_store(const InputFiles& files, const ComputeOptions& options,
                                  const std::filesystem::path& root);

/// Reads a city directory back: config, districts, assignment counts,
/// series and the recorded ingest digests.
CityData load_city(const std::filesystem::path& city_dir);

/// Relative artifact paths inside a city directory.
std::string series_path(std::string_view region_id, ActivityType type);
std::string profile_path(std::string_view region_id, ActivityType type, bool normalized);
std::string residuals_path(std::string_view region_id, ActivityType type);
std::string events_path(std::string_view region_id, ActivityType type);
std::string model_path(std::size_t k);
std::string density_path(density::Metric metric, ActivityType type);

}  // namespace citypulse::pipeline
