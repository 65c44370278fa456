#include "citypulse/spatial.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "citypulse/error.hpp"
#include "citypulse/ingest.hpp"

namespace citypulse::spatial {

std::string cell_region_id(CellIndex cell) {
  return std::to_string(cell.row) + ":" + std::to_string(cell.col);
}

std::optional<CellIndex> parse_cell_region_id(std::string_view id) {
  const auto colon = id.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  CellIndex c;
  const auto r = id.substr(0, colon);
  const auto k = id.substr(colon + 1);
  auto [p1, e1] = std::from_chars(r.data(), r.data() + r.size(), c.row);
  auto [p2, e2] = std::from_chars(k.data(), k.data() + k.size(), c.col);
  if (r.empty() || k.empty() || e1 != std::errc{} || e2 != std::errc{} ||
      p1 != r.data() + r.size() || p2 != k.data() + k.size() || c.row < 0 || c.col < 0) {
    return std::nullopt;
  }
  return c;
}

namespace {

int cells_along(double extent_m, double cell_m) {
  // Tolerate rounding when the extent is an exact multiple of the cell.
  const double n = std::ceil(extent_m / cell_m - 1e-9);
  return std::max(1, static_cast<int>(n));
}

// Index of the half-open interval containing x, consistent with edge().
template <typename Edge>
int interval_of(double x, double origin, double width, int count, Edge edge) {
  int i = static_cast<int>(std::floor((x - origin) / width));
  i = std::clamp(i, 0, count - 1);
  while (i > 0 && x < edge(i)) --i;
  while (i + 1 < count && x >= edge(i + 1)) ++i;
  return i;
}

}  // namespace

Grid::Grid(const BoundingBox& bbox, double cell_size_m) : bbox_(bbox), cell_size_m_(cell_size_m) {
  if (!(bbox.lat_min < bbox.lat_max) || !(bbox.lon_min < bbox.lon_max)) {
    throw ValidationError("degenerate bbox");
  }
  if (!(cell_size_m > 0.0)) throw ValidationError("cell size must be positive");
  const double mid_lat = 0.5 * (bbox.lat_min + bbox.lat_max);
  m_per_deg_lat_ = kMetersPerDegree;
  m_per_deg_lon_ = kMetersPerDegree * std::cos(mid_lat * std::numbers::pi / 180.0);
  n_rows_ = cells_along((bbox.lat_max - bbox.lat_min) * m_per_deg_lat_, cell_size_m);
  n_cols_ = cells_along((bbox.lon_max - bbox.lon_min) * m_per_deg_lon_, cell_size_m);
  cell_deg_lat_ = cell_size_m / m_per_deg_lat_;
  cell_deg_lon_ = cell_size_m / m_per_deg_lon_;
}

double Grid::row_edge(int row) const noexcept { return bbox_.lat_min + row * cell_deg_lat_; }
double Grid::col_edge(int col) const noexcept { return bbox_.lon_min + col * cell_deg_lon_; }

std::optional<CellIndex> Grid::locate(double lat, double lon) const noexcept {
  if (!bbox_.contains(lat, lon)) return std::nullopt;
  const int row = interval_of(lat, bbox_.lat_min, cell_deg_lat_, n_rows_,
                              [this](int r) { return row_edge(r); });
  const int col = interval_of(lon, bbox_.lon_min, cell_deg_lon_, n_cols_,
                              [this](int c) { return col_edge(c); });
  return CellIndex{row, col};
}

BoundingBox Grid::cell_bounds(CellIndex c) const noexcept {
  return {row_edge(c.row), col_edge(c.col), std::min(row_edge(c.row + 1), bbox_.lat_max),
          std::min(col_edge(c.col + 1), bbox_.lon_max)};
}

std::pair<double, double> Grid::cell_center(CellIndex c) const noexcept {
  const auto b = cell_bounds(c);
  return {0.5 * (b.lat_min + b.lat_max), 0.5 * (b.lon_min + b.lon_max)};
}

Grid build_grid(const CityConfig& config) { return Grid(config.bbox, config.cell_size_m); }

// --- districts -------------------------------------------------------------

namespace {

Ring open_ring(Ring ring) {
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

double cross(std::pair<double, double> o, std::pair<double, double> a,
             std::pair<double, double> b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

bool on_segment(std::pair<double, double> p, std::pair<double, double> a,
                std::pair<double, double> b) {
  const double scale = std::max({std::abs(a.first - b.first), std::abs(a.second - b.second), 1e-300});
  if (std::abs(cross(a, b, p)) > 1e-12 * scale * scale) return false;
  return p.first >= std::min(a.first, b.first) && p.first <= std::max(a.first, b.first) &&
         p.second >= std::min(a.second, b.second) && p.second <= std::max(a.second, b.second);
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_intersect(std::pair<double, double> p1, std::pair<double, double> p2,
                        std::pair<double, double> q1, std::pair<double, double> q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

// Crossing parity of a horizontal ray (increasing lon) against one ring, and
// whether the point lies on the ring.
void ring_crossings(const Ring& ring, double lat, double lon, bool& inside, bool& boundary) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if (on_segment({lat, lon}, a, b)) {
      boundary = true;
      return;
    }
    if ((a.first > lat) != (b.first > lat)) {
      const double x = (b.second - a.second) * (lat - a.first) / (b.first - a.first) + a.second;
      if (lon < x) inside = !inside;
    }
  }
}

Ring parse_ring(const nlohmann::json& coords, const std::string& id) {
  Ring ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) {
      throw ValidationError("district " + id + ": malformed coordinate");
    }
    ring.emplace_back(pt[1].get<double>(), pt[0].get<double>());
  }
  ring = open_ring(std::move(ring));
  Ring distinct = ring;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw ValidationError("district " + id + ": ring needs at least 3 vertices");
  }
  if (!ring_is_simple(ring)) throw ValidationError("district " + id + ": ring self-intersects");
  return ring;
}

Polygon parse_polygon(const nlohmann::json& rings, const std::string& id) {
  if (!rings.is_array() || rings.empty()) {
    throw ValidationError("district " + id + ": polygon without rings");
  }
  Polygon poly;
  poly.outer = parse_ring(rings[0], id);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], id));
  return poly;
}

std::string property_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

}  // namespace

bool ring_is_simple(const Ring& input) {
  const Ring ring = open_ring(input);
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a1 = ring[i];
    const auto& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const auto& b1 = ring[j];
      const auto& b2 = ring[(j + 1) % n];
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool District::contains(double lat, double lon) const noexcept {
  for (const auto& poly : polygons) {
    bool inside = false;
    bool boundary = false;
    ring_crossings(poly.outer, lat, lon, inside, boundary);
    for (const auto& hole : poly.holes) {
      if (boundary) break;
      ring_crossings(hole, lat, lon, inside, boundary);
    }
    if (boundary || inside) return true;
  }
  return false;
}

std::vector<District> parse_districts(const nlohmann::json& geojson) {
  std::vector<District> out;
  try {
    if (geojson.value("type", std::string{}) != "FeatureCollection") {
      throw ValidationError("districts: expected a FeatureCollection");
    }
    for (const auto& feature : geojson.at("features")) {
      const auto& props = feature.at("properties");
      District d;
      d.district_id = property_string(props.at("district_id"));
      d.name = props.contains("name") ? property_string(props["name"]) : d.district_id;
      if (d.district_id.empty()) throw ValidationError("districts: empty district_id");
      const auto& geom = feature.at("geometry");
      const auto type = geom.at("type").get<std::string>();
      const auto& coords = geom.at("coordinates");
      if (type == "Polygon") {
        d.polygons.push_back(parse_polygon(coords, d.district_id));
      } else if (type == "MultiPolygon") {
        for (const auto& p : coords) d.polygons.push_back(parse_polygon(p, d.district_id));
      } else {
        throw ValidationError("district " + d.district_id + ": unsupported geometry " + type);
      }
      for (const auto& other : out) {
        if (other.district_id == d.district_id) {
          throw ValidationError("districts: duplicate district_id " + d.district_id);
        }
      }
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("districts: ") + e.what());
  }
  return out;
}

std::vector<District> load_districts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("districts: " + std::string(e.what()));
  }
  return parse_districts(j);
}

// --- assignment ------------------------------------------------------------

std::optional<std::uint32_t> AssignmentTable::find(std::string_view antenna_id) const {
  // Heterogeneous lookup needs C++20 transparent hashing; a short-lived
  // string keeps this portable to GCC 11.
  const auto it = index.find(std::string(antenna_id));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

AssignmentTable assign_antennas(const Grid& grid, const std::vector<District>& districts,
                                const std::vector<Antenna>& antennas) {
  AssignmentTable table;
  table.antenna_ids.reserve(antennas.size());
  table.assignments.reserve(antennas.size());
  for (const auto& a : antennas) {
    const auto cell = grid.locate(a.lat, a.lon);
    if (!cell) continue;
    AntennaAssignment asg{*cell, -1};
    for (std::size_t d = 0; d < districts.size(); ++d) {
      if (districts[d].contains(a.lat, a.lon)) {
        asg.district = static_cast<int>(d);
        break;
      }
    }
    table.index.emplace(a.antenna_id, static_cast<std::uint32_t>(table.antenna_ids.size()));
    table.antenna_ids.push_back(a.antenna_id);
    table.assignments.push_back(asg);
  }
  return table;
}

// --- series ----------------------------------------------------------------

std::size_t PresenceMask::count() const noexcept {
  std::size_t n = 0;
  for (const auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t PresenceMask::count_range(std::size_t begin, std::size_t end) const noexcept {
  std::size_t n = 0;
  for (std::size_t i = begin; i < end; ++i) n += test(i) ? 1 : 0;
  return n;
}

void PresenceMask::merge(const PresenceMask& other) {
  if (other.size_ != size_) throw std::invalid_argument("presence size mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

RegionSeries::RegionSeries(std::string id, std::size_t windows)
    : region_id(std::move(id)), presence(windows) {
  for (auto& v : values.v) v.assign(windows, 0);
}

void RegionSeries::merge(const RegionSeries& other) {
  if (other.region_id != region_id || other.size() != size()) {
    throw std::invalid_argument("cannot merge series of different regions");
  }
  for (std::size_t t = 0; t < kNumActivityTypes; ++t) {
    auto& dst = values.v[t];
    const auto& src = other.values.v[t];
    for (std::size_t w = 0; w < dst.size(); ++w) dst[w] += src[w];
  }
  presence.merge(other.presence);
}

Aggregator::Aggregator(const Grid& grid, const AssignmentTable& table,
                       const std::vector<District>& districts, const WindowAxis& axis)
    : table_(&table), axis_(axis), city_(std::string(kCityRegionId), axis.size()) {
  const std::size_t n = table.size();
  cell_antenna_counts_.assign(grid.cell_count(), 0);
  for (const auto& a : table.assignments) ++cell_antenna_counts_[grid.flat_index(a.cell)];
  std::vector<int> slot_of(grid.cell_count(), -1);
  for (std::size_t flat = 0; flat < grid.cell_count(); ++flat) {
    if (cell_antenna_counts_[flat] == 0) continue;
    slot_of[flat] = static_cast<int>(slot_cell_.size());
    slot_cell_.push_back(flat);
    cells_.emplace_back(cell_region_id(grid.cell_at(flat)), axis.size());
  }
  antenna_slot_.resize(n);
  antenna_district_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    antenna_slot_[i] = slot_of[grid.flat_index(table.assignments[i].cell)];
    antenna_district_[i] = table.assignments[i].district;
  }
  for (const auto& d : districts) districts_.emplace_back(d.district_id, axis.size());
  words_per_antenna_ = (axis.size() + 63) / 64;
  seen_.assign(n * words_per_antenna_, 0);
}

void Aggregator::add(const ActivityRecord& record) {
  // Records usually arrive grouped by antenna.
  std::optional<std::uint32_t> antenna;
  if (last_antenna_ && record.antenna_id == last_antenna_id_) {
    antenna = last_antenna_;
  } else {
    antenna = table_->find(record.antenna_id);
    last_antenna_id_ = record.antenna_id;
    last_antenna_ = antenna;
  }
  if (!antenna) {
    ++report_.unknown_antenna;
    return;
  }
  const auto window = axis_.index_of(record.window_start);
  if (!window) {
    ++report_.outside_period;
    return;
  }
  auto& word = seen_[*antenna * words_per_antenna_ + (*window >> 6)];
  const std::uint64_t bit = std::uint64_t{1} << (*window & 63);
  if ((word & bit) != 0) {
    if (!duplicate_) duplicate_.emplace(*antenna, *window);
    return;
  }
  word |= bit;
  add_indexed(*antenna, *window, record.counts);
}

void Aggregator::add_indexed(std::uint32_t antenna, std::size_t window, const Counters& counts) {
  ++report_.records;
  auto& cell = cells_[static_cast<std::size_t>(antenna_slot_[antenna])];
  for (std::size_t t = 0; t < kNumActivityTypes; ++t) {
    cell.values.v[t][window] += counts.v[t];
    city_.values.v[t][window] += counts.v[t];
  }
  cell.presence.set(window);
  city_.presence.set(window);
  if (const int d = antenna_district_[antenna]; d >= 0) {
    auto& dist = districts_[static_cast<std::size_t>(d)];
    for (std::size_t t = 0; t < kNumActivityTypes; ++t) dist.values.v[t][window] += counts.v[t];
    dist.presence.set(window);
  }
}

void Aggregator::merge(Aggregator&& other) {
  if (other.table_ != table_ || !(other.axis_ == axis_)) {
    throw std::invalid_argument("cannot merge aggregators over different inputs");
  }
  for (std::size_t i = 0; i < seen_.size(); ++i) {
    const auto overlap = seen_[i] & other.seen_[i];
    if (overlap != 0 && !duplicate_) {
      const auto antenna = static_cast<std::uint32_t>(i / words_per_antenna_);
      const auto window = (i % words_per_antenna_) * 64 +
                          static_cast<std::size_t>(std::countr_zero(overlap));
      duplicate_.emplace(antenna, window);
    }
    seen_[i] |= other.seen_[i];
  }
  if (!duplicate_ && other.duplicate_) duplicate_ = other.duplicate_;
  for (std::size_t s = 0; s < cells_.size(); ++s) cells_[s].merge(other.cells_[s]);
  for (std::size_t d = 0; d < districts_.size(); ++d) districts_[d].merge(other.districts_[d]);
  city_.merge(other.city_);
  report_.records += other.report_.records;
  report_.unknown_antenna += other.report_.unknown_antenna;
  report_.outside_period += other.report_.outside_period;
}

AggregatedSeries Aggregator::finish() {
  if (duplicate_) {
    throw ingest::DuplicateRecordError(table_->antenna_ids[duplicate_->first],
                                       axis_.at(duplicate_->second));
  }
  AggregatedSeries out;
  for (auto& s : cells_) {
    auto id = s.region_id;
    out.cells.emplace(std::move(id), std::move(s));
  }
  for (auto& s : districts_) {
    auto id = s.region_id;
    out.districts.emplace(std::move(id), std::move(s));
  }
  out.city = std::move(city_);
  out.cell_antenna_counts = std::move(cell_antenna_counts_);
  out.report = report_;
  cells_.clear();
  districts_.clear();
  return out;
}

AggregatedSeries aggregate(const std::vector<ActivityRecord>& records, const AssignmentTable& table,
                           const Grid& grid, const std::vector<District>& districts,
                           const WindowAxis& axis) {
  Aggregator agg(grid, table, districts, axis);
  for (const auto& r : records) agg.add(r);
  return agg.finish();
}

}  // namespace citypulse::spatial
