#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "citypulse/activity.hpp"
#include "citypulse/clusters.hpp"
#include "citypulse/density.hpp"
#include "citypulse/events.hpp"
#include "citypulse/profiles.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

// JSON exports of every stored object. Each *_from_json inverts its
// *_to_json exactly: re-serializing a parsed object gives the same bytes.
namespace citypulse::codec {

/// {region_id, activity, start, window_seconds, values}; absent windows are
/// null.
nlohmann::json series_to_json(const spatial::RegionSeries& series, ActivityType type,
                              const WindowAxis& axis);

/// Fills one type of `series` (sized to the axis) from a series export.
/// Presence is OR-ed in. Throws ValidationError on a shape mismatch.
void series_from_json(const nlohmann::json& j, spatial::RegionSeries& series, ActivityType type,
                      const WindowAxis& axis);

/// {region_id, activity, resolution, bin_start, values, windows, present};
/// bins without a present window have a null value.
nlohmann::json resampled_to_json(const std::string& region_id, ActivityType type,
                                 const profiles::ResampledSeries& series);

/// {region_id, activity, normalized, values, support}
nlohmann::json profile_to_json(const std::string& region_id, ActivityType type,
                               const profiles::WeeklyProfile& profile);
profiles::WeeklyProfile profile_from_json(const nlohmann::json& j);

/// {region_id, activity, start, window_seconds, values, sigma}; NaN is null.
nlohmann::json residuals_to_json(const profiles::ResidualSeries& residuals);
profiles::ResidualSeries residuals_from_json(const nlohmann::json& j);

nlohmann::json event_to_json(const events::EventReport& event);
events::EventReport event_from_json(const nlohmann::json& j);

/// {region_id, activity, events:[...]}
nlohmann::json region_events_to_json(const std::string& region_id, ActivityType type,
                                     const std::vector<events::EventReport>& events);

/// {k, seed, types, sse, iterations, converged, sse_history, labels,
///  centroids, assignment:{region_id: cluster}}
nlohmann::json model_to_json(const clusters::ClusterModel& model);
clusters::ClusterModel model_from_json(const nlohmann::json& j);

/// {metric, type, [other], period:{start, end}, n_rows, n_cols, values,
///  coverage}, row-major with absent cells as null.
nlohmann::json density_to_json(const density::DensityMap& map);
density::DensityMap density_from_json(const nlohmann::json& j);

/// GeoJSON geometry (Polygon or MultiPolygon, [lon, lat] positions).
nlohmann::json district_geometry(const spatial::District& district);

}  // namespace citypulse::codec
