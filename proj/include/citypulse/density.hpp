#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace citypulse::density {

enum class Metric { Volume, Ratio, PairRatio };

std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view token);

struct Period {
  Timestamp start{};
  Timestamp end{};  // exclusive
};

struct DensityMap {
  int n_rows = 0;
  int n_cols = 0;
  Metric metric = Metric::Volume;
  ActivityType type = ActivityType::Calls;
  std::optional<ActivityType> other;  // PairRatio only
  Period period;
  std::vector<std::optional<double>> values;  // row-major, nullopt = absent
  std::vector<std::uint32_t> coverage;        // present windows per cell
};

using CellSeries = std::map<std::string, spatial::RegionSeries>;

/// Mean per-present-window volume of `type` in each cell over `period`.
/// Throws ArgumentError for an empty period.
DensityMap volume_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                      Period period, const WindowAxis& axis);

/// Share of `type` in the naive sum of all five types' volumes (each in its
/// own unit). Cells whose total is zero are absent.
DensityMap ratio_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                     Period period, const WindowAxis& axis);

/// type / (type + other): a unit-safe comparison when both are counts.
DensityMap pair_ratio_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                          ActivityType other, Period period, const WindowAxis& axis);

}  // namespace citypulse::density
