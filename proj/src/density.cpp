#include "citypulse/density.hpp"

#include "citypulse/error.hpp"

namespace citypulse::density {

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Volume: return "volume";
    case Metric::Ratio: return "ratio";
    case Metric::PairRatio: return "pair_ratio";
  }
  return "volume";
}

Metric parse_metric(std::string_view token) {
  if (token == "volume") return Metric::Volume;
  if (token == "ratio") return Metric::Ratio;
  if (token == "pair_ratio") return Metric::PairRatio;
  throw ArgumentError("unknown density metric '" + std::string(token) + "'");
}

namespace {

struct CellTotals {
  PerType<std::int64_t> sums{};
  std::uint32_t coverage = 0;
};

// Window index range of `period` on the axis; throws for an empty range.
std::pair<std::size_t, std::size_t> window_range(Period period, const WindowAxis& axis) {
  if (!(period.start < period.end)) throw ArgumentError("empty density period");
  const auto begin = axis.lower_index(period.start);
  const auto end = axis.lower_index(period.end);
  if (begin >= end) throw ArgumentError("density period does not overlap the city period");
  return {begin, end};
}

std::vector<std::optional<CellTotals>> totals(const CellSeries& cells, const spatial::Grid& grid,
                                              Period period, const WindowAxis& axis) {
  const auto [begin, end] = window_range(period, axis);
  std::vector<std::optional<CellTotals>> out(grid.cell_count());
  for (const auto& [id, series] : cells) {
    const auto cell = spatial::parse_cell_region_id(id);
    if (!cell || cell->row >= grid.n_rows() || cell->col >= grid.n_cols()) {
      throw ArgumentError("series '" + id + "' is not a grid cell");
    }
    CellTotals t;
    for (std::size_t w = begin; w < end; ++w) {
      if (!series.presence.test(w)) continue;
      ++t.coverage;
      for (std::size_t k = 0; k < kNumActivityTypes; ++k) t.sums.v[k] += series.values.v[k][w];
    }
    out[grid.flat_index(*cell)] = t;
  }
  return out;
}

DensityMap empty_map(const spatial::Grid& grid, Metric metric, ActivityType type, Period period) {
  DensityMap m;
  m.n_rows = grid.n_rows();
  m.n_cols = grid.n_cols();
  m.metric = metric;
  m.type = type;
  m.period = period;
  m.values.assign(grid.cell_count(), std::nullopt);
  m.coverage.assign(grid.cell_count(), 0);
  return m;
}

}  // namespace

DensityMap volume_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                      Period period, const WindowAxis& axis) {
  auto m = empty_map(grid, Metric::Volume, type, period);
  const auto cell_totals = totals(cells, grid, period, axis);
  for (std::size_t i = 0; i < cell_totals.size(); ++i) {
    if (!cell_totals[i]) continue;
    m.coverage[i] = cell_totals[i]->coverage;
    if (m.coverage[i] == 0) continue;
    m.values[i] = static_cast<double>(cell_totals[i]->sums[type]) / m.coverage[i];
  }
  return m;
}

DensityMap ratio_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                     Period period, const WindowAxis& axis) {
  auto m = empty_map(grid, Metric::Ratio, type, period);
  const auto cell_totals = totals(cells, grid, period, axis);
  for (std::size_t i = 0; i < cell_totals.size(); ++i) {
    if (!cell_totals[i]) continue;
    m.coverage[i] = cell_totals[i]->coverage;
    std::int64_t total = 0;
    for (const auto v : cell_totals[i]->sums.v) total += v;
    if (total <= 0) continue;
    m.values[i] = static_cast<double>(cell_totals[i]->sums[type]) / static_cast<double>(total);
  }
  return m;
}

DensityMap pair_ratio_map(const CellSeries& cells, const spatial::Grid& grid, ActivityType type,
                          ActivityType other, Period period, const WindowAxis& axis) {
  auto m = empty_map(grid, Metric::PairRatio, type, period);
  m.other = other;
  const auto cell_totals = totals(cells, grid, period, axis);
  for (std::size_t i = 0; i < cell_totals.size(); ++i) {
    if (!cell_totals[i]) continue;
    m.coverage[i] = cell_totals[i]->coverage;
    const auto a = cell_totals[i]->sums[type];
    const auto total = a + (type == other ? 0 : cell_totals[i]->sums[other]);
    if (total <= 0) continue;
    m.values[i] = static_cast<double>(a) / static_cast<double>(total);
  }
  return m;
}

}  // namespace citypulse::density
