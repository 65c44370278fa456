#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citypulse/activity.hpp"
#include "citypulse/config.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace citypulse::synth {

enum class Archetype { Business = 0, Residential = 1, Leisure = 2, Uniform = 3 };
inline constexpr std::size_t kNumArchetypes = 4;
inline constexpr std::array<Archetype, kNumArchetypes> kArchetypes{
    Archetype::Business, Archetype::Residential, Archetype::Leisure, Archetype::Uniform};

std::string_view to_string(Archetype a) noexcept;
std::optional<Archetype> parse_archetype(std::string_view name) noexcept;

/// 672-bin weekly shape (Monday 00:00 local first), scaled to mean 1.
using Template = std::vector<double>;
using TemplateSet = std::array<PerType<Template>, kNumArchetypes>;

struct BusinessShape {
  double center_hour = 13.0;
  double sigma_hours = 2.5;
  double weekend_amplitude = 0.25;
};

struct ResidentialShape {
  double center_hour = 20.0;
  double sigma_hours = 2.0;
  double plateau_level = 0.45;  // weekend 09:00-21:00, relative to the peak
  double plateau_start_hour = 9.0;
  double plateau_end_hour = 21.0;
};

struct LeisureShape {
  double center_hour = 14.0;
  double sigma_hours = 3.0;
  double weekday_amplitude = 0.3;
};

/// Night-time base load: every template is floored at this share of its peak.
inline constexpr double kTemplateFloor = 0.05;

Template business_template(const BusinessShape& shape = {});
Template residential_template(const ResidentialShape& shape = {});
Template leisure_template(const LeisureShape& shape = {});
Template uniform_template();

/// Pinned templates; every activity type of an archetype shares its shape.
TemplateSet builtin_templates();

struct VolumeScale {
  double mu = 0.0;     // of log(scale)
  double sigma = 0.5;  // of log(scale)
};

struct HolidaySpec {
  std::string week_id;  // ISO week, e.g. "2013-W52"
  double damping = 0.6;
};

struct EventSpec {
  std::optional<std::string> cell;                   // "row:col"
  std::optional<std::pair<double, double>> point;    // (lat, lon), used if no cell
  Timestamp start{};
  std::size_t duration = 12;                         // windows
  double amplitude = 10.0;                           // multiplier, > 1
  std::vector<ActivityType> types{kActivityTypes.begin(), kActivityTypes.end()};
};

struct ScenarioSpec {
  std::uint64_t seed = 20130401;
  CityConfig city;
  std::size_t n_antennas = 2000;
  std::array<double, kNumArchetypes> mix{0.25, 0.45, 0.15, 0.15};
  TemplateSet templates = builtin_templates();
  VolumeScale scale;
  /// Mean count per antenna and window at template value 1.
  PerType<double> type_volume{{4.0, 3.0, 2.0e6, 4.0e5, 40.0}};
  double weekly_growth = 0.01;  // multiplicative: (1 + g)^week
  double noise_sigma = 0.2;     // per-window log-normal sigma on the rate
  std::vector<HolidaySpec> holidays;
  std::vector<EventSpec> events;

  /// Throws ValidationError when mix fractions do not sum to 1, a template
  /// is negative or has zero sum, or an amplitude is not above 1.
  void validate() const;
};

/// The default 40-week, 2,000-antenna scenario with one holiday week and one
/// 12-window stadium event at 10x amplitude.
ScenarioSpec default_scenario();

/// Reads a scenario; absent keys keep their default_scenario() values.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioSpec& spec);

struct AntennaTruth {
  std::string antenna_id;
  Archetype archetype = Archetype::Uniform;
  std::string cell;
  double scale = 1.0;
};

struct EventTruth {
  std::string region_id;  // cell
  std::size_t start_index = 0;
  std::size_t end_index = 0;  // inclusive
  Timestamp start{};
  Timestamp end{};            // start of last window
  double amplitude = 1.0;
  std::vector<ActivityType> types;
};

struct GroundTruth {
  std::vector<AntennaTruth> antennas;
  std::map<std::string, Archetype> cells;  // occupied cells only
  std::vector<EventTruth> events;
  std::vector<HolidaySpec> holidays;
  double weekly_growth = 0.0;
};

nlohmann::json to_json(const GroundTruth& truth);

/// Deterministic scenario generator. Antenna placement and cell archetypes
/// come from the master stream; each antenna's counts come from its own
/// sub-stream seeded by (seed, antenna index), and output is ordered by
/// antenna then time.
///
/// Expected count = scale * type_volume * template[bin] * trend(week) *
/// holiday(week) * event(window). The rate of each (antenna, window) gets one
/// mean-preserving log-normal factor shared by the five types; each count is
/// then Poisson around its rate (inversion below 10, transformed rejection
/// above).
class Generator {
 public:
  explicit Generator(ScenarioSpec spec);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  const std::vector<Antenna>& antennas() const noexcept { return antennas_; }
  const GroundTruth& ground_truth() const noexcept { return truth_; }
  const WindowCalendar& calendar() const noexcept { return calendar_; }
  const spatial::Grid& grid() const noexcept { return grid_; }

  /// Expected (noise-free) count for one antenna, window and type.
  double expected(std::size_t antenna, std::size_t window, ActivityType type) const;

  /// Generates all records of one antenna in time order.
  void generate_antenna(std::size_t antenna,
                        const std::function<void(const ActivityRecord&)>& sink) const;

  void for_each_record(const std::function<void(const ActivityRecord&)>& sink) const;

  void write_antennas(std::ostream& out) const;
  /// Writes the activity CSV (with header) for antennas [first, last).
  void write_activity(std::ostream& out, std::size_t first, std::size_t last) const;

 private:
  ScenarioSpec spec_;
  spatial::Grid grid_;
  WindowCalendar calendar_;
  std::vector<Antenna> antennas_;
  std::vector<Archetype> archetype_;
  std::vector<double> scale_;
  std::vector<double> week_factor_;  // trend * holiday per local week
  // per antenna: (window begin, window end, multiplier, type mask)
  struct ActiveEvent {
    std::size_t begin;
    std::size_t end;
    double amplitude;
    std::uint8_t type_mask;
  };
  std::vector<std::vector<ActiveEvent>> antenna_events_;
  GroundTruth truth_;
};

/// Writes city.json, antennas.csv, activity.csv (or activity-NNN.csv when
/// shards > 1) and ground_truth.json into `dir`.
GroundTruth write_scenario(const ScenarioSpec& spec, const std::filesystem::path& dir,
                           std::size_t shards = 1);

}  // namespace citypulse::synth
