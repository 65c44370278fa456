#include "citypulse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>

#include "citypulse/error.hpp"
#include "citypulse/ingest.hpp"

namespace citypulse::synth {

namespace {

constexpr std::array<std::string_view, kNumArchetypes> kArchetypeNames{
    "business", "residential", "leisure", "uniform"};

double slot_hour(std::size_t slot) { return (static_cast<double>(slot) + 0.5) / 4.0; }

double bump(double hour, double center, double sigma) {
  const double d = (hour - center) / sigma;
  return std::exp(-0.5 * d * d);
}

// Floors at kTemplateFloor of the peak, then rescales to mean 1.
Template finish(Template t) {
  const double peak = *std::max_element(t.begin(), t.end());
  for (auto& v : t) v = std::max(v, kTemplateFloor * peak);
  double sum = 0.0;
  for (const double v : t) sum += v;
  const double mean = sum / static_cast<double>(t.size());
  for (auto& v : t) v /= mean;
  return t;
}

template <typename DayFn>
Template weekly(DayFn fn) {
  Template t(kBinsPerWeek);
  for (std::size_t day = 0; day < 7; ++day) {
    for (std::size_t slot = 0; slot < kSlotsPerDay; ++slot) {
      t[day * kSlotsPerDay + slot] = fn(day >= 5, slot_hour(slot));
    }
  }
  return finish(std::move(t));
}

// Portable draws over mt19937_64: only the raw engine output is standardized,
// so distributions are implemented here.
class Draws {
 public:
  explicit Draws(std::mt19937_64& rng) : rng_(rng) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::int64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 10.0) {
      const double u = uniform();
      double p = std::exp(-lambda);
      double cdf = p;
      std::int64_t k = 0;
      while (u > cdf && k < 1000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
      }
      return k;
    }
    // Transformed rejection with squeeze (Hoermann, PTRS).
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -lambda + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::int64_t>(k);
      }
    }
  }

 private:
  std::mt19937_64& rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::mt19937_64 sub_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kMasterStream = 0xFFFFFFFFFFFFFFFFULL;

std::string antenna_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "A%05zu", i);
  return buf;
}

nlohmann::json types_json(const std::vector<ActivityType>& types) {
  auto arr = nlohmann::json::array();
  for (const auto t : types) arr.push_back(std::string(to_string(t)));
  return arr;
}

std::vector<ActivityType> types_from_json(const nlohmann::json& j) {
  std::vector<ActivityType> out;
  for (const auto& v : j) {
    const auto t = parse_activity_type(v.get<std::string>());
    if (!t) throw ValidationError("scenario: unknown activity type " + v.dump());
    out.push_back(*t);
  }
  return out;
}

}  // namespace

std::string_view to_string(Archetype a) noexcept {
  return kArchetypeNames[static_cast<std::size_t>(a)];
}

std::optional<Archetype> parse_archetype(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumArchetypes; ++i) {
    if (kArchetypeNames[i] == name) return kArchetypes[i];
  }
  return std::nullopt;
}

Template business_template(const BusinessShape& s) {
  return weekly([&](bool weekend, double h) {
    return (weekend ? s.weekend_amplitude : 1.0) * bump(h, s.center_hour, s.sigma_hours);
  });
}

Template residential_template(const ResidentialShape& s) {
  return weekly([&](bool weekend, double h) {
    if (!weekend) return bump(h, s.center_hour, s.sigma_hours);
    return (h >= s.plateau_start_hour && h < s.plateau_end_hour) ? s.plateau_level : 0.0;
  });
}

Template leisure_template(const LeisureShape& s) {
  return weekly([&](bool weekend, double h) {
    return (weekend ? 1.0 : s.weekday_amplitude) * bump(h, s.center_hour, s.sigma_hours);
  });
}

Template uniform_template() { return Template(kBinsPerWeek, 1.0); }

TemplateSet builtin_templates() {
  TemplateSet set;
  const std::array<Template, kNumArchetypes> shapes{business_template(), residential_template(),
                                                    leisure_template(), uniform_template()};
  for (std::size_t a = 0; a < kNumArchetypes; ++a) set[a].v.fill(shapes[a]);
  return set;
}

void ScenarioSpec::validate() const {
  city.validate();
  if (n_antennas == 0) throw ValidationError("scenario needs at least one antenna");
  double mix_sum = 0.0;
  for (const double m : mix) {
    if (m < 0.0) throw ValidationError("mix fractions must be non-negative");
    mix_sum += m;
  }
  if (std::abs(mix_sum - 1.0) > 1e-9) throw ValidationError("mix fractions must sum to 1");
  for (const auto& per_type : templates) {
    for (const auto& t : per_type.v) {
      if (t.size() != kBinsPerWeek) throw ValidationError("templates need 672 bins");
      double sum = 0.0;
      for (const double v : t) {
        if (v < 0.0 || !std::isfinite(v)) throw ValidationError("template values must be >= 0");
        sum += v;
      }
      if (!(sum > 0.0)) throw ValidationError("template sum must be positive");
    }
  }
  for (const auto v : type_volume.v) {
    if (!(v >= 0.0)) throw ValidationError("type volumes must be non-negative");
  }
  if (!(noise_sigma >= 0.0) || !(scale.sigma >= 0.0)) {
    throw ValidationError("noise and scale sigma must be non-negative");
  }
  if (!(weekly_growth > -1.0)) throw ValidationError("weekly_growth must exceed -1");
  for (const auto& h : holidays) {
    if (!(h.damping >= 0.0)) throw ValidationError("holiday damping must be non-negative");
  }
  for (const auto& e : events) {
    if (!(e.amplitude > 1.0)) throw ValidationError("event amplitude must be greater than 1");
    if (e.duration == 0) throw ValidationError("event duration must be positive");
    if (!e.cell && !e.point) throw ValidationError("event needs a cell or a point");
  }
}

ScenarioSpec default_scenario() {
  using namespace std::chrono;
  ScenarioSpec s;
  s.city.city_id = "synthcity";
  s.city.bbox = {51.5000, -0.1600, 51.5494, -0.0879};
  s.city.cell_size_m = kDefaultCellSizeMeters;
  s.city.period_start = sys_days{year{2013} / April / 1};
  s.city.period_end = s.city.period_start + days{7 * 40};
  s.city.timezone = "Europe/London";
  s.holidays.push_back({"2013-W52", 0.6});
  EventSpec stadium;
  stadium.point = std::make_pair(51.5247, -0.1240);
  stadium.start = Timestamp{sys_days{year{2013} / May / 25}} + hours{18} + minutes{45};
  stadium.duration = 12;
  stadium.amplitude = 10.0;
  s.events.push_back(stadium);
  return s;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s = default_scenario();
  try {
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("city")) s.city = city_config_from_json(j["city"]);
    if (j.contains("n_antennas")) s.n_antennas = j["n_antennas"].get<std::size_t>();
    if (j.contains("mix")) {
      const auto& m = j["mix"];
      for (std::size_t a = 0; a < kNumArchetypes; ++a) {
        s.mix[a] = m.value(std::string(kArchetypeNames[a]), 0.0);
      }
    }
    if (j.contains("scale")) {
      s.scale.mu = j["scale"].value("mu", s.scale.mu);
      s.scale.sigma = j["scale"].value("sigma", s.scale.sigma);
    }
    if (j.contains("type_volume")) {
      for (const auto t : kActivityTypes) {
        s.type_volume[t] = j["type_volume"].value(std::string(to_string(t)), s.type_volume[t]);
      }
    }
    s.weekly_growth = j.value("weekly_growth", s.weekly_growth);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    if (j.contains("holidays")) {
      s.holidays.clear();
      for (const auto& h : j["holidays"]) {
        s.holidays.push_back({h.at("week_id").get<std::string>(), h.value("damping", 0.6)});
      }
    }
    if (j.contains("events")) {
      s.events.clear();
      for (const auto& e : j["events"]) {
        EventSpec ev;
        if (e.contains("cell")) ev.cell = e["cell"].get<std::string>();
        if (e.contains("point")) {
          ev.point = std::make_pair(e["point"].at(0).get<double>(), e["point"].at(1).get<double>());
        }
        const auto start = parse_utc_timestamp(e.at("start").get<std::string>());
        if (!start) throw ValidationError("scenario: bad event start");
        ev.start = *start;
        ev.duration = e.value("duration", ev.duration);
        ev.amplitude = e.value("amplitude", ev.amplitude);
        if (e.contains("types")) ev.types = types_from_json(e["types"]);
        s.events.push_back(std::move(ev));
      }
    }
    if (j.contains("shapes")) {
      const auto& sh = j["shapes"];
      if (sh.contains("business")) {
        BusinessShape b;
        b.center_hour = sh["business"].value("center_hour", b.center_hour);
        b.sigma_hours = sh["business"].value("sigma_hours", b.sigma_hours);
        b.weekend_amplitude = sh["business"].value("weekend_amplitude", b.weekend_amplitude);
        s.templates[0].v.fill(business_template(b));
      }
      if (sh.contains("residential")) {
        ResidentialShape r;
        const auto& rj = sh["residential"];
        r.center_hour = rj.value("center_hour", r.center_hour);
        r.sigma_hours = rj.value("sigma_hours", r.sigma_hours);
        r.plateau_level = rj.value("plateau_level", r.plateau_level);
        r.plateau_start_hour = rj.value("plateau_start_hour", r.plateau_start_hour);
        r.plateau_end_hour = rj.value("plateau_end_hour", r.plateau_end_hour);
        s.templates[1].v.fill(residential_template(r));
      }
      if (sh.contains("leisure")) {
        LeisureShape l;
        l.center_hour = sh["leisure"].value("center_hour", l.center_hour);
        l.sigma_hours = sh["leisure"].value("sigma_hours", l.sigma_hours);
        l.weekday_amplitude = sh["leisure"].value("weekday_amplitude", l.weekday_amplitude);
        s.templates[2].v.fill(leisure_template(l));
      }
    }
    if (j.contains("templates")) {
      for (const auto& [name, per_type] : j["templates"].items()) {
        const auto arch = parse_archetype(name);
        if (!arch) throw ValidationError("scenario: unknown archetype " + name);
        for (const auto& [type_name, values] : per_type.items()) {
          const auto t = parse_activity_type(type_name);
          if (!t) throw ValidationError("scenario: unknown activity type " + type_name);
          s.templates[static_cast<std::size_t>(*arch)][*t] = values.get<Template>();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["city"] = to_json(s.city);
  j["n_antennas"] = s.n_antennas;
  for (std::size_t a = 0; a < kNumArchetypes; ++a) j["mix"][std::string(kArchetypeNames[a])] = s.mix[a];
  j["scale"] = {{"mu", s.scale.mu}, {"sigma", s.scale.sigma}};
  for (const auto t : kActivityTypes) j["type_volume"][std::string(to_string(t))] = s.type_volume[t];
  j["weekly_growth"] = s.weekly_growth;
  j["noise_sigma"] = s.noise_sigma;
  j["holidays"] = nlohmann::json::array();
  for (const auto& h : s.holidays) j["holidays"].push_back({{"week_id", h.week_id}, {"damping", h.damping}});
  j["events"] = nlohmann::json::array();
  for (const auto& e : s.events) {
    nlohmann::json ej{{"start", format_utc_timestamp(e.start)},
                      {"duration", e.duration},
                      {"amplitude", e.amplitude},
                      {"types", types_json(e.types)}};
    if (e.cell) ej["cell"] = *e.cell;
    if (e.point) ej["point"] = {e.point->first, e.point->second};
    j["events"].push_back(std::move(ej));
  }
  const auto builtin = builtin_templates();
  for (std::size_t a = 0; a < kNumArchetypes; ++a) {
    for (const auto t : kActivityTypes) {
      if (s.templates[a][t] != builtin[a][t]) {
        j["templates"][std::string(kArchetypeNames[a])][std::string(to_string(t))] = s.templates[a][t];
      }
    }
  }
  return j;
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["weekly_growth"] = truth.weekly_growth;
  j["holidays"] = nlohmann::json::array();
  for (const auto& h : truth.holidays) {
    j["holidays"].push_back({{"week_id", h.week_id}, {"damping", h.damping}});
  }
  j["events"] = nlohmann::json::array();
  for (const auto& e : truth.events) {
    j["events"].push_back({{"region_id", e.region_id},
                           {"start", format_utc_timestamp(e.start)},
                           {"end", format_utc_timestamp(e.end)},
                           {"start_index", e.start_index},
                           {"end_index", e.end_index},
                           {"amplitude", e.amplitude},
                           {"types", types_json(e.types)}});
  }
  j["cells"] = nlohmann::json::object();
  for (const auto& [id, arch] : truth.cells) j["cells"][id] = std::string(to_string(arch));
  j["antennas"] = nlohmann::json::array();
  for (const auto& a : truth.antennas) {
    j["antennas"].push_back({{"antenna_id", a.antenna_id},
                             {"archetype", std::string(to_string(a.archetype))},
                             {"cell", a.cell},
                             {"scale", a.scale}});
  }
  return j;
}

Generator::Generator(ScenarioSpec spec)
    : spec_((spec.validate(), std::move(spec))),
      grid_(spatial::build_grid(spec_.city)),
      calendar_(WindowAxis(spec_.city.period_start, spec_.city.period_end), spec_.city.timezone) {
  auto master = sub_stream(spec_.seed, kMasterStream);
  Draws draws(master);
  const auto& bbox = spec_.city.bbox;

  // Archetypes are planted per grid cell, in flat cell order.
  std::vector<Archetype> cell_arch(grid_.cell_count());
  for (auto& arch : cell_arch) {
    const double u = draws.uniform();
    double cum = 0.0;
    arch = Archetype::Uniform;
    for (std::size_t a = 0; a < kNumArchetypes; ++a) {
      cum += spec_.mix[a];
      if (spec_.mix[a] > 0.0 && u < cum) {
        arch = kArchetypes[a];
        break;
      }
    }
    if (u >= cum) {  // rounding at the top end: take the last non-zero share
      for (std::size_t a = kNumArchetypes; a-- > 0;) {
        if (spec_.mix[a] > 0.0) {
          arch = kArchetypes[a];
          break;
        }
      }
    }
  }

  antennas_.reserve(spec_.n_antennas);
  for (std::size_t i = 0; i < spec_.n_antennas; ++i) {
    Antenna a;
    a.antenna_id = antenna_name(i);
    a.lat = bbox.lat_min + draws.uniform() * (bbox.lat_max - bbox.lat_min);
    a.lon = bbox.lon_min + draws.uniform() * (bbox.lon_max - bbox.lon_min);
    const auto cell = *grid_.locate(a.lat, a.lon);
    const auto arch = cell_arch[grid_.flat_index(cell)];
    const double scale = std::exp(spec_.scale.mu + spec_.scale.sigma * draws.normal());
    archetype_.push_back(arch);
    scale_.push_back(scale);
    const auto cell_id = spatial::cell_region_id(cell);
    truth_.antennas.push_back({a.antenna_id, arch, cell_id, scale});
    truth_.cells[cell_id] = arch;
    antennas_.push_back(std::move(a));
  }

  week_factor_.resize(calendar_.num_weeks());
  for (std::size_t w = 0; w < week_factor_.size(); ++w) {
    week_factor_[w] = std::pow(1.0 + spec_.weekly_growth, static_cast<double>(w));
  }
  for (const auto& h : spec_.holidays) {
    if (const auto week = calendar_.find_week(h.week_id)) week_factor_[*week] *= h.damping;
  }
  truth_.holidays = spec_.holidays;
  truth_.weekly_growth = spec_.weekly_growth;

  antenna_events_.resize(antennas_.size());
  const auto& axis = calendar_.axis();
  for (const auto& e : spec_.events) {
    spatial::CellIndex cell;
    if (e.cell) {
      const auto parsed = spatial::parse_cell_region_id(*e.cell);
      if (!parsed || parsed->row >= grid_.n_rows() || parsed->col >= grid_.n_cols()) {
        throw ValidationError("event cell " + *e.cell + " is not on the grid");
      }
      cell = *parsed;
    } else {
      const auto located = grid_.locate(e.point->first, e.point->second);
      if (!located) throw ValidationError("event point outside the bbox");
      cell = *located;
    }
    const auto start = axis.index_of(e.start);
    if (!start || *start + e.duration > axis.size()) {
      throw ValidationError("event window outside the period or unaligned");
    }
    std::uint8_t mask = 0;
    for (const auto t : e.types) mask |= static_cast<std::uint8_t>(1U << ordinal(t));
    const auto cell_id = spatial::cell_region_id(cell);
    for (std::size_t i = 0; i < antennas_.size(); ++i) {
      if (truth_.antennas[i].cell == cell_id) {
        antenna_events_[i].push_back({*start, *start + e.duration, e.amplitude, mask});
      }
    }
    truth_.events.push_back({cell_id, *start, *start + e.duration - 1, e.start,
                             axis.at(*start + e.duration - 1), e.amplitude, e.types});
  }
}

double Generator::expected(std::size_t antenna, std::size_t window, ActivityType type) const {
  const auto arch = static_cast<std::size_t>(archetype_[antenna]);
  double rate = scale_[antenna] * spec_.type_volume[type] *
                spec_.templates[arch][type][calendar_.wall_bin(window)] *
                week_factor_[calendar_.week_index(window)];
  for (const auto& e : antenna_events_[antenna]) {
    if (window >= e.begin && window < e.end && (e.type_mask >> ordinal(type)) & 1U) {
      rate *= e.amplitude;
    }
  }
  return rate;
}

void Generator::generate_antenna(std::size_t antenna,
                                 const std::function<void(const ActivityRecord&)>& sink) const {
  auto rng = sub_stream(spec_.seed, antenna);
  Draws draws(rng);
  const auto arch = static_cast<std::size_t>(archetype_[antenna]);
  const double sigma = spec_.noise_sigma;
  const double noise_shift = -0.5 * sigma * sigma;
  PerType<double> base;
  for (const auto t : kActivityTypes) base[t] = scale_[antenna] * spec_.type_volume[t];
  const auto& events = antenna_events_[antenna];
  const auto& axis = calendar_.axis();

  ActivityRecord rec;
  rec.antenna_id = antennas_[antenna].antenna_id;
  for (std::size_t w = 0; w < axis.size(); ++w) {
    const double noise = sigma > 0.0 ? std::exp(sigma * draws.normal() + noise_shift) : 1.0;
    const double common = week_factor_[calendar_.week_index(w)] * noise;
    const auto bin = calendar_.wall_bin(w);
    for (std::size_t t = 0; t < kNumActivityTypes; ++t) {
      double rate = base.v[t] * spec_.templates[arch].v[t][bin] * common;
      for (const auto& e : events) {
        if (w >= e.begin && w < e.end && (e.type_mask >> t) & 1U) rate *= e.amplitude;
      }
      rec.counts.v[t] = draws.poisson(rate);
    }
    rec.window_start = axis.at(w);
    sink(rec);
  }
}

void Generator::for_each_record(const std::function<void(const ActivityRecord&)>& sink) const {
  for (std::size_t i = 0; i < antennas_.size(); ++i) generate_antenna(i, sink);
}

void Generator::write_antennas(std::ostream& out) const {
  std::string buf(ingest::kAntennaHeader);
  buf.push_back('\n');
  for (const auto& a : antennas_) ingest::append_antenna_row(buf, a);
  out << buf;
}

void Generator::write_activity(std::ostream& out, std::size_t first, std::size_t last) const {
  std::string buf(ingest::kActivityHeader);
  buf.push_back('\n');
  buf.reserve(1 << 22);
  last = std::min(last, antennas_.size());
  for (std::size_t i = first; i < last; ++i) {
    generate_antenna(i, [&](const ActivityRecord& r) { ingest::append_activity_row(buf, r); });
    if (buf.size() > (1 << 21)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

GroundTruth write_scenario(const ScenarioSpec& spec, const std::filesystem::path& dir,
                           std::size_t shards) {
  namespace fs = std::filesystem;
  const Generator gen(spec);
  fs::create_directories(dir);
  const auto open = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "city.json");
    f << to_json(gen.spec().city).dump(2) << '\n';
  }
  {
    auto f = open(dir / "antennas.csv");
    gen.write_antennas(f);
  }
  shards = std::max<std::size_t>(1, std::min(shards, gen.antennas().size()));
  const std::size_t n = gen.antennas().size();
  for (std::size_t s = 0; s < shards; ++s) {
    char name[48];
    if (shards == 1) {
      std::snprintf(name, sizeof name, "activity.csv");
    } else {
      std::snprintf(name, sizeof name, "activity-%03zu.csv", s);
    }
    auto f = open(dir / name);
    gen.write_activity(f, s * n / shards, (s + 1) * n / shards);
    if (!f) throw std::runtime_error("write failed for " + (dir / name).string());
  }
  {
    auto f = open(dir / "ground_truth.json");
    f << to_json(gen.ground_truth()).dump(2) << '\n';
  }
  return gen.ground_truth();
}

}  // namespace citypulse::synth
