#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/profiles.hpp"

namespace citypulse::events {

struct DetectOptions {
  double threshold_z = 4.0;
  std::size_t min_duration = 2;  // windows, gaps included
  std::size_t merge_gap = 2;     // sub-threshold windows bridged inside an event
  bool negative = false;         // also report drops (z <= -threshold)
};

struct EventReport {
  std::string region_id;
  ActivityType type = ActivityType::Calls;
  std::size_t start_index = 0;  // inclusive window indices
  std::size_t end_index = 0;
  std::size_t peak_index = 0;
  Timestamp start_window{};
  Timestamp end_window{};       // start of the last window in the event
  Timestamp peak_window{};
  double peak_z = 0.0;          // negative for drops
  double mean_z = 0.0;          // over windows of the span with defined z

  std::size_t duration() const noexcept { return end_index - start_index + 1; }
  bool negative() const noexcept { return peak_z < 0.0; }

  friend bool operator==(const EventReport&, const EventReport&) = default;
};

/// z-score run detector over a residual series. A window triggers when
/// residual / sigma[bin] reaches the threshold; windows with undefined
/// residual or sigma never trigger. Runs separated by at most `merge_gap`
/// non-triggering windows merge; merged spans shorter than `min_duration`
/// are dropped. Output is sorted by start.
///
/// Throws ArgumentError for a non-positive threshold.
std::vector<EventReport> detect(const profiles::ResidualSeries& residuals,
                                const DetectOptions& options = {});

}  // namespace citypulse::events
