#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "citypulse/activity.hpp"
#include "citypulse/config.hpp"
#include "citypulse/time.hpp"

namespace citypulse::spatial {

/// Meters per degree of latitude used by the equirectangular approximation.
inline constexpr double kMetersPerDegree = 111320.0;

struct CellIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Region id of a cell: "row:col".
std::string cell_region_id(CellIndex cell);
std::optional<CellIndex> parse_cell_region_id(std::string_view id);

inline constexpr std::string_view kCityRegionId = "city";

class Grid {
 public:
  Grid() = default;
  Grid(const BoundingBox& bbox, double cell_size_m);

  const BoundingBox& bbox() const noexcept { return bbox_; }
  double cell_size_m() const noexcept { return cell_size_m_; }
  int n_rows() const noexcept { return n_rows_; }
  int n_cols() const noexcept { return n_cols_; }
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(n_rows_) * static_cast<std::size_t>(n_cols_);
  }
  double meters_per_deg_lat() const noexcept { return m_per_deg_lat_; }
  double meters_per_deg_lon() const noexcept { return m_per_deg_lon_; }

  /// Latitude of the lower edge of `row` (row n_rows is the bbox top only
  /// when the extent is an exact multiple of the cell size).
  double row_edge(int row) const noexcept;
  double col_edge(int col) const noexcept;

  /// Half-open cells [edge, next_edge); the last row and column are closed at
  /// the bbox max edge. Points outside the bbox give nullopt.
  std::optional<CellIndex> locate(double lat, double lon) const noexcept;

  /// Cell rectangle clipped to the bbox.
  BoundingBox cell_bounds(CellIndex cell) const noexcept;
  std::pair<double, double> cell_center(CellIndex cell) const noexcept;

  std::size_t flat_index(CellIndex cell) const noexcept {
    return static_cast<std::size_t>(cell.row) * static_cast<std::size_t>(n_cols_) +
           static_cast<std::size_t>(cell.col);
  }
  CellIndex cell_at(std::size_t flat) const noexcept {
    return {static_cast<int>(flat / static_cast<std::size_t>(n_cols_)),
            static_cast<int>(flat % static_cast<std::size_t>(n_cols_))};
  }

 private:
  BoundingBox bbox_{};
  double cell_size_m_ = 0.0;
  int n_rows_ = 0;
  int n_cols_ = 0;
  double m_per_deg_lat_ = kMetersPerDegree;
  double m_per_deg_lon_ = kMetersPerDegree;
  double cell_deg_lat_ = 0.0;
  double cell_deg_lon_ = 0.0;
};

/// Throws ValidationError on a degenerate bbox or non-positive cell size.
Grid build_grid(const CityConfig& config);

using Ring = std::vector<std::pair<double, double>>;  // (lat, lon), closed or open

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

struct District {
  std::string district_id;
  std::string name;
  std::vector<Polygon> polygons;  // one for Polygon, several for MultiPolygon

  /// Even-odd containment; a point on any ring edge counts as inside.
  bool contains(double lat, double lon) const noexcept;
};

/// Parses a GeoJSON FeatureCollection (Polygon / MultiPolygon features with
/// `district_id` and `name` properties). Coordinates are GeoJSON [lon, lat].
/// Throws ValidationError for rings with fewer than three distinct vertices
/// or self-intersections.
std::vector<District> parse_districts(const nlohmann::json& geojson);
std::vector<District> load_districts(const std::filesystem::path& path);

/// True when no two non-adjacent edges of the ring intersect.
bool ring_is_simple(const Ring& ring);

struct AntennaAssignment {
  CellIndex cell;
  int district = -1;  // index into the district list, -1 for none
};

struct AssignmentTable {
  std::vector<std::string> antenna_ids;
  std::vector<AntennaAssignment> assignments;  // parallel to antenna_ids
  std::unordered_map<std::string, std::uint32_t> index;

  std::optional<std::uint32_t> find(std::string_view antenna_id) const;
  std::size_t size() const noexcept { return antenna_ids.size(); }
};

/// Maps each antenna to its grid cell and to the first district (in file
/// order) containing it. Antennas outside the grid are skipped; ingest has
/// already removed them.
AssignmentTable assign_antennas(const Grid& grid, const std::vector<District>& districts,
                                const std::vector<Antenna>& antennas);

/// Dense per-window presence bitmask.
class PresenceMask {
 public:
  PresenceMask() = default;
  explicit PresenceMask(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i) noexcept { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  std::size_t count() const noexcept;
  std::size_t count_range(std::size_t begin, std::size_t end) const noexcept;
  void merge(const PresenceMask& other);

  friend bool operator==(const PresenceMask&, const PresenceMask&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Aggregated series of one region over the city window axis. Absent windows
/// hold 0 with the presence bit clear.
struct RegionSeries {
  std::string region_id;
  PerType<std::vector<std::int64_t>> values;
  PresenceMask presence;

  RegionSeries() = default;
  RegionSeries(std::string id, std::size_t windows);

  std::size_t size() const noexcept { return presence.size(); }
  const std::vector<std::int64_t>& operator[](ActivityType t) const noexcept {
    return values[t];
  }

  /// Elementwise sum; the region ids must match.
  void merge(const RegionSeries& other);
};

struct AggregateReport {
  std::size_t records = 0;
  std::size_t unknown_antenna = 0;
  std::size_t outside_period = 0;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

struct AggregatedSeries {
  std::map<std::string, RegionSeries> cells;      // keyed by "row:col"
  std::map<std::string, RegionSeries> districts;  // keyed by district id
  RegionSeries city;
  std::vector<std::size_t> cell_antenna_counts;   // flat grid index
  AggregateReport report;
};

/// Commutative integer fold of activity records into per-region series.
/// Shards aggregated separately merge by elementwise addition.
class Aggregator {
 public:
  Aggregator(const Grid& grid, const AssignmentTable& table,
             const std::vector<District>& districts, const WindowAxis& axis);

  /// Adds one record. Unknown antennas and windows outside the axis are
  /// counted and skipped. A repeated (antenna, window) is remembered and
  /// reported by finish().
  void add(const ActivityRecord& record);

  /// Folds another shard in; an (antenna, window) present in both shards is
  /// a duplicate.
  void merge(Aggregator&& other);

  const AggregateReport& report() const noexcept { return report_; }

  /// Moves out series for cells holding at least one antenna, every district
  /// and the whole city. Throws DuplicateRecordError if any duplicate was
  /// seen.
  AggregatedSeries finish();

 private:
  void add_indexed(std::uint32_t antenna, std::size_t window, const Counters& counts);

  const AssignmentTable* table_;
  WindowAxis axis_;
  std::vector<std::int32_t> antenna_slot_;      // occupied-cell slot per antenna
  std::vector<std::int32_t> antenna_district_;
  std::vector<std::size_t> slot_cell_;          // slot -> flat cell index
  std::vector<std::size_t> cell_antenna_counts_;
  std::vector<RegionSeries> cells_;
  std::vector<RegionSeries> districts_;
  RegionSeries city_;
  std::vector<std::uint64_t> seen_;             // antenna x window bitset
  std::size_t words_per_antenna_ = 0;
  std::optional<std::pair<std::uint32_t, std::size_t>> duplicate_;
  std::string last_antenna_id_;
  std::optional<std::uint32_t> last_antenna_;
  AggregateReport report_;
};

/// Convenience fold over an in-memory record list.
AggregatedSeries aggregate(const std::vector<ActivityRecord>& records,
                           const AssignmentTable& table, const Grid& grid,
                           const std::vector<District>& districts, const WindowAxis& axis);

}  // namespace citypulse::spatial
