#include "citypulse/events.hpp"

#include <algorithm>
#include <cmath>

#include "citypulse/error.hpp"

namespace citypulse::events {

namespace {

struct Run {
  std::size_t begin;
  std::size_t end;  // inclusive
};

// z at window w, or NaN when it cannot be evaluated.
double z_at(const profiles::ResidualSeries& r, std::size_t w) {
  if (!r.defined(w)) return std::nan("");
  const double s = r.sigma_at(w);
  if (!(s > 0.0)) return std::nan("");
  return r.values[w] / s;
}

void detect_side(const profiles::ResidualSeries& r, const std::vector<double>& z,
                 const DetectOptions& opt, double sign, std::vector<EventReport>& out) {
  std::vector<Run> runs;
  const std::size_t n = z.size();
  for (std::size_t w = 0; w < n; ++w) {
    const bool hit = !std::isnan(z[w]) && sign * z[w] >= opt.threshold_z;
    if (!hit) continue;
    if (!runs.empty() && w - runs.back().end - 1 <= opt.merge_gap) {
      runs.back().end = w;
    } else {
      runs.push_back({w, w});
    }
  }
  for (const auto& run : runs) {
    if (run.end - run.begin + 1 < opt.min_duration) continue;
    EventReport e;
    e.region_id = r.region_id;
    e.type = r.type;
    e.start_index = run.begin;
    e.end_index = run.end;
    e.peak_index = run.begin;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t w = run.begin; w <= run.end; ++w) {
      if (std::isnan(z[w])) continue;
      sum += z[w];
      ++defined;
      if (sign * z[w] > sign * z[e.peak_index]) e.peak_index = w;
    }
    e.peak_z = z[e.peak_index];
    e.mean_z = sum / static_cast<double>(defined);
    e.start_window = r.start + kWindowLength * static_cast<std::int64_t>(e.start_index);
    e.end_window = r.start + kWindowLength * static_cast<std::int64_t>(e.end_index);
    e.peak_window = r.start + kWindowLength * static_cast<std::int64_t>(e.peak_index);
    out.push_back(std::move(e));
  }
}

}  // namespace

std::vector<EventReport> detect(const profiles::ResidualSeries& residuals,
                                const DetectOptions& options) {
  if (!(options.threshold_z > 0.0)) throw ArgumentError("threshold_z must be positive");
  std::vector<double> z(residuals.values.size());
  for (std::size_t w = 0; w < z.size(); ++w) z[w] = z_at(residuals, w);
  std::vector<EventReport> out;
  detect_side(residuals, z, options, 1.0, out);
  if (options.negative) {
    detect_side(residuals, z, options, -1.0, out);
    std::stable_sort(out.begin(), out.end(), [](const EventReport& a, const EventReport& b) {
      return a.start_index < b.start_index;
    });
  }
  return out;
}

}  // namespace citypulse::events
