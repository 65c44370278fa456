#include "citypulse/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "citypulse/error.hpp"

namespace citypulse::clusters {

namespace {

// Top 53 bits of one mt19937_64 draw; identical across platforms, unlike
// std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_inputs(const std::vector<FeatureVector>& vectors, std::size_t k) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  if (k > vectors.size()) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the number of vectors (" +
                        std::to_string(vectors.size()) + ")");
  }
  const auto dim = vectors.front().x.size();
  std::set<std::string_view> ids;
  for (const auto& v : vectors) {
    if (v.x.size() != dim) throw ArgumentError("feature vectors differ in length");
    if (!ids.insert(v.region_id).second) {
      throw ArgumentError("duplicate region id '" + v.region_id + "'");
    }
  }
}

// Nearest centroid per vector (ties to the lower index); returns the SSE.
double assign(const std::vector<FeatureVector>& vectors,
              const std::vector<std::vector<double>>& centroids, std::vector<int>& assignment) {
  double sse = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    int best = 0;
    double best_d = squared_distance(vectors[i].x, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = squared_distance(vectors[i].x, centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignment[i] = best;
    sse += best_d;
  }
  return sse;
}

std::vector<double> mean_of(const std::vector<FeatureVector>& vectors,
                            const std::vector<int>& assignment, int cluster, std::size_t dim) {
  std::vector<double> sum(dim, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (assignment[i] != cluster) continue;
    ++count;
    const auto& x = vectors[i].x;
    for (std::size_t d = 0; d < dim; ++d) sum[d] += x[d];
  }
  if (count > 0) {
    for (auto& s : sum) s /= static_cast<double>(count);
  }
  return sum;
}

// Recomputes every centroid as its members' mean. A cluster left without
// members takes the point farthest from its own centroid.
void update_centroids(const std::vector<FeatureVector>& vectors, std::vector<int>& assignment,
                      std::vector<std::vector<double>>& centroids) {
  const std::size_t k = centroids.size();
  const std::size_t dim = vectors.front().x.size();
  std::vector<std::size_t> sizes(k, 0);
  for (const int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) centroids[c] = mean_of(vectors, assignment, static_cast<int>(c), dim);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = vectors.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto own = static_cast<std::size_t>(assignment[i]);
      if (sizes[own] < 2) continue;
      const double d = squared_distance(vectors[i].x, centroids[own]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == vectors.size()) continue;  // unreachable while k <= n
    const auto donor = static_cast<std::size_t>(assignment[far]);
    assignment[far] = static_cast<int>(c);
    --sizes[donor];
    sizes[c] = 1;
    centroids[c] = vectors[far].x;
    centroids[donor] = mean_of(vectors, assignment, static_cast<int>(donor), dim);
  }
}

std::vector<std::vector<double>> kmeanspp(const std::vector<FeatureVector>& vectors,
                                          std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = vectors.size();
  std::vector<std::vector<double>> centers;
  std::vector<std::uint8_t> chosen(n, 0);
  auto first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centers.push_back(vectors[first].x);
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(vectors[i].x, centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (const double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > target) break;
      }
    } else {
      // All remaining points coincide with a center; take the next unused one.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = 1;
    centers.push_back(vectors[pick].x);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(vectors[i].x, centers.back()));
    }
  }
  return centers;
}

ClusterModel lloyd(const std::vector<FeatureVector>& vectors,
                   std::vector<std::vector<double>> centroids, const KMeansOptions& options) {
  ClusterModel model;
  model.k = centroids.size();
  model.seed = options.seed;
  for (const auto& v : vectors) model.region_ids.push_back(v.region_id);

  std::vector<int> assignment(vectors.size(), 0);
  double sse = assign(vectors, centroids, assignment);
  model.sse_history.push_back(sse);
  bool settled = false;
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    update_centroids(vectors, assignment, centroids);
    ++model.iterations;
    std::vector<int> next(vectors.size(), 0);
    const double next_sse = assign(vectors, centroids, next);
    model.sse_history.push_back(next_sse);
    const bool changed = next != assignment;
    assignment = std::move(next);
    const double prev = sse;
    sse = next_sse;
    if (!changed) {
      model.converged = true;
      settled = true;
      break;
    }
    if (prev - sse <= options.tol * prev) {
      model.converged = true;
      break;
    }
  }
  if (!settled) update_centroids(vectors, assignment, centroids);
  model.sse = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    model.sse += squared_distance(vectors[i].x, centroids[static_cast<std::size_t>(assignment[i])]);
  }
  model.centroids = std::move(centroids);
  model.assignment = std::move(assignment);
  return model;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::string_view to_string(ClusterLabel label) noexcept {
  switch (label) {
    case ClusterLabel::Business: return "business";
    case ClusterLabel::Residential: return "residential";
    case ClusterLabel::Leisure: return "leisure";
    case ClusterLabel::Other: return "other";
  }
  return "other";
}

std::map<std::string, int> ClusterModel::assignment_map() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < region_ids.size(); ++i) out.emplace(region_ids[i], assignment[i]);
  return out;
}

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

FeatureSet build_features(const ProfileTable& profiles, std::span<const ActivityType> types) {
  if (types.empty()) throw ArgumentError("feature type list is empty");
  FeatureSet out;
  out.types.assign(types.begin(), types.end());
  std::sort(out.types.begin(), out.types.end());
  out.types.erase(std::unique(out.types.begin(), out.types.end()), out.types.end());
  for (const auto& [region, per_type] : profiles) {
    bool admitted = true;
    for (const auto t : out.types) {
      const auto& p = per_type[t];
      if (!p.normalized) {
        throw ArgumentError("profile of region '" + region + "' is not normalized");
      }
      if (p.empty) admitted = false;
    }
    if (!admitted) {
      out.skipped.push_back(region);
      continue;
    }
    FeatureVector fv;
    fv.region_id = region;
    fv.x.reserve(kBinsPerWeek * out.types.size());
    for (const auto t : out.types) {
      const auto& vals = per_type[t].values;
      fv.x.insert(fv.x.end(), vals.begin(), vals.end());
    }
    out.vectors.push_back(std::move(fv));
  }
  return out;
}

ClusterModel kmeans(const std::vector<FeatureVector>& vectors, const KMeansOptions& options) {
  if (vectors.empty()) throw ArgumentError("no feature vectors");
  check_inputs(vectors, options.k);
  return lloyd(vectors, kmeanspp(vectors, options.k, options.seed), options);
}

ClusterModel kmeans_from(const std::vector<FeatureVector>& vectors,
                         std::vector<std::vector<double>> initial, const KMeansOptions& options) {
  if (vectors.empty()) throw ArgumentError("no feature vectors");
  check_inputs(vectors, initial.size());
  for (const auto& c : initial) {
    if (c.size() != vectors.front().x.size()) {
      throw ArgumentError("initial centroid length differs from the features");
    }
  }
  return lloyd(vectors, std::move(initial), options);
}

double mean_silhouette(const std::vector<FeatureVector>& vectors, std::span<const int> assignment) {
  const std::size_t n = vectors.size();
  if (n == 0 || assignment.size() != n) throw ArgumentError("assignment does not match vectors");
  const int k = *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(squared_distance(vectors[i].x, vectors[j].x));
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(assignment[i]);
    if (sizes[own] < 2) continue;  // singleton: s = 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[static_cast<std::size_t>(assignment[j])] += dist[i * n + j];
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

std::vector<KSelectionRow> select_k(const std::vector<FeatureVector>& vectors,
                                    std::vector<std::size_t> k_range, std::uint64_t seed) {
  std::sort(k_range.begin(), k_range.end());
  k_range.erase(std::unique(k_range.begin(), k_range.end()), k_range.end());
  const std::size_t n = vectors.size();
  for (const auto k : k_range) {
    if (k < 2 || k + 1 > n) {
      throw ArgumentError("k = " + std::to_string(k) + " outside [2, n-1] for n = " +
                          std::to_string(n));
    }
  }
  std::vector<KSelectionRow> rows;
  for (const auto k : k_range) {
    KMeansOptions opt;
    opt.k = k;
    opt.seed = seed;
    const auto model = kmeans(vectors, opt);
    rows.push_back({k, model.sse, mean_silhouette(vectors, model.assignment)});
  }
  return rows;
}

LabelScores label_scores(std::span<const double> block) {
  if (block.size() != kBinsPerWeek) throw ArgumentError("label block must have 672 bins");
  double total = 0.0, work = 0.0, evening = 0.0, weekend = 0.0;
  for (std::size_t b = 0; b < kBinsPerWeek; ++b) {
    const std::size_t day = b / kSlotsPerDay;
    const std::size_t slot = b % kSlotsPerDay;
    const double v = block[b];
    total += v;
    if (day < 5) {
      if (slot >= 36 && slot < 72) work += v;   // 09:00-18:00
      if (slot >= 72) evening += v;             // 18:00-24:00
    } else if (slot >= 36 && slot < 80) {       // 09:00-20:00
      weekend += v;
    }
  }
  const auto ratio = [&](double mass, double bins) {
    return total > 0.0 ? (mass / total) / (bins / static_cast<double>(kBinsPerWeek)) : 0.0;
  };
  return {ratio(work, 5 * 36), ratio(evening, 5 * 24), ratio(weekend, 2 * 44)};
}

ClusterLabel label_cluster(std::span<const double> centroid, std::span<const ActivityType> types) {
  if (types.empty() || centroid.size() != kBinsPerWeek * types.size()) {
    throw ArgumentError("centroid length does not match the type list");
  }
  const auto block = centroid.subspan(0, kBinsPerWeek);
  double sum = 0.0;
  for (const double v : block) sum += v;
  if (std::abs(sum - 1.0) > 1e-6) throw ArgumentError("centroid block is not L1-normalized");
  const auto s = label_scores(block);
  if (s.work >= s.evening && s.work >= s.weekend) {
    return s.work >= kLabelThreshold ? ClusterLabel::Business : ClusterLabel::Other;
  }
  if (s.evening >= s.weekend) {
    return s.evening >= kLabelThreshold ? ClusterLabel::Residential : ClusterLabel::Other;
  }
  return s.weekend >= kLabelThreshold ? ClusterLabel::Leisure : ClusterLabel::Other;
}

void label_model(ClusterModel& model) {
  model.labels.clear();
  for (const auto& c : model.centroids) model.labels.push_back(label_cluster(c, model.types));
}

ModelComparison compare_models(const ClusterModel& a, const ClusterModel& b) {
  if (a.types != b.types) throw ArgumentError("models use different feature types");
  const auto len = [](const ClusterModel& m) {
    return m.centroids.empty() ? std::size_t{0} : m.centroids.front().size();
  };
  if (len(a) != len(b)) throw ArgumentError("models differ in feature length");
  ModelComparison cmp;
  cmp.distances.assign(a.centroids.size(), std::vector<double>(b.centroids.size(), 0.0));
  for (std::size_t i = 0; i < a.centroids.size(); ++i) {
    for (std::size_t j = 0; j < b.centroids.size(); ++j) {
      cmp.distances[i][j] = std::sqrt(squared_distance(a.centroids[i], b.centroids[j]));
    }
  }
  std::vector<std::uint8_t> used_a(a.centroids.size(), 0), used_b(b.centroids.size(), 0);
  const std::size_t pairs = std::min(a.centroids.size(), b.centroids.size());
  for (std::size_t m = 0; m < pairs; ++m) {
    ClusterMatch best{0, 0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < a.centroids.size(); ++i) {
      if (used_a[i]) continue;
      for (std::size_t j = 0; j < b.centroids.size(); ++j) {
        if (used_b[j]) continue;
        if (cmp.distances[i][j] < best.distance) best = {i, j, cmp.distances[i][j]};
      }
    }
    used_a[best.a] = 1;
    used_b[best.b] = 1;
    cmp.matches.push_back(best);
  }
  return cmp;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ArgumentError("labelings differ in length");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  const auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : joint) index += c2(count);
  for (const auto& [key, count] : rows) sum_a += c2(count);
  for (const auto& [key, count] : cols) sum_b += c2(count);
  const double expected = sum_a * sum_b / c2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace citypulse::clusters
