#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/profiles.hpp"

namespace citypulse::clusters {

struct FeatureVector {
  std::string region_id;
  std::vector<double> x;
};

/// Normalized profiles of a region, one slot per activity type.
using RegionProfiles = PerType<profiles::WeeklyProfile>;
using ProfileTable = std::map<std::string, RegionProfiles>;

struct FeatureSet {
  std::vector<ActivityType> types;
  std::vector<FeatureVector> vectors;
  std::vector<std::string> skipped;  // regions with an empty requested profile
};

/// Concatenates the requested normalized 672-blocks in ordinal order.
/// Throws ArgumentError for an empty type list or an unnormalized profile.
FeatureSet build_features(const ProfileTable& profiles, std::span<const ActivityType> types);

enum class ClusterLabel { Business, Residential, Leisure, Other };

std::string_view to_string(ClusterLabel label) noexcept;

struct ClusterModel {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<ActivityType> types;
  std::vector<std::vector<double>> centroids;
  std::vector<std::string> region_ids;  // input order
  std::vector<int> assignment;          // parallel to region_ids
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// SSE after every assignment step, in order.
  std::vector<double> sse_history;
  std::vector<ClusterLabel> labels;

  std::map<std::string, int> assignment_map() const;
  std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansOptions {
  std::size_t k = 5;
  std::uint64_t seed = 42;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // relative SSE change
};

/// Lloyd's algorithm with k-means++ seeding.
///
/// Seeding draws from std::mt19937_64 initialized with `seed`; uniforms are
/// taken from the top 53 bits of each draw, so the sequence is identical on
/// every conforming platform. Nearest-centroid ties go to the lower index.
/// A cluster that empties is reseeded with the point farthest from its
/// current centroid. Sums run in input order, so a given input and seed
/// produce a bit-identical model.
///
/// Iteration stops when assignments no longer change, when the relative SSE
/// decrease drops below `tol`, or after `max_iter` centroid updates. The
/// returned centroids are always the means of the returned assignment.
///
/// Throws ArgumentError for k == 0, k > n, mismatched lengths or duplicate
/// region ids. Labels are left empty; see label_model().
ClusterModel kmeans(const std::vector<FeatureVector>& vectors, const KMeansOptions& options);

/// Lloyd iterations from caller-supplied centroids (no seeding).
ClusterModel kmeans_from(const std::vector<FeatureVector>& vectors,
                         std::vector<std::vector<double>> initial,
                         const KMeansOptions& options);

struct KSelectionRow {
  std::size_t k = 0;
  double sse = 0.0;
  double mean_silhouette = 0.0;
};

/// Runs kmeans for each k (ascending) and scores it. Every k must lie in
/// [2, n-1].
std::vector<KSelectionRow> select_k(const std::vector<FeatureVector>& vectors,
                                    std::vector<std::size_t> k_range, std::uint64_t seed);

/// Mean silhouette with Euclidean distance. Singleton clusters score 0.
double mean_silhouette(const std::vector<FeatureVector>& vectors, std::span<const int> assignment);

/// Over-representation of the first block's mass in three windows relative
/// to a uniform profile: weekday 09-18, weekday 18-24, weekend 09-20.
struct LabelScores {
  double work = 0.0;
  double evening = 0.0;
  double weekend = 0.0;
};

inline constexpr double kLabelThreshold = 1.15;

LabelScores label_scores(std::span<const double> block);

/// Heuristic functional label from the first 672-block of a centroid.
/// Throws ArgumentError when that block does not sum to 1 within 1e-6.
ClusterLabel label_cluster(std::span<const double> centroid, std::span<const ActivityType> types);

/// Fills model.labels.
void label_model(ClusterModel& model);

struct ClusterMatch {
  std::size_t a = 0;
  std::size_t b = 0;
  double distance = 0.0;
};

struct ModelComparison {
  std::vector<std::vector<double>> distances;  // k_a x k_b
  std::vector<ClusterMatch> matches;           // ascending distance
};

/// Pairwise centroid distances plus greedy minimum-distance matching (ties
/// to the lower a, then lower b). Throws ArgumentError when the feature
/// layouts differ.
ModelComparison compare_models(const ClusterModel& a, const ClusterModel& b);

/// Chance-corrected agreement of two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace citypulse::clusters
