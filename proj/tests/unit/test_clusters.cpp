#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "citypulse/clusters.hpp"
#include "citypulse/error.hpp"
#include "citypulse/synth.hpp"

using namespace citypulse;
using namespace citypulse::clusters;
using doctest::Approx;

namespace {

std::vector<FeatureVector> points(std::initializer_list<std::vector<double>> rows) {
  std::vector<FeatureVector> out;
  for (const auto& r : rows) out.push_back({"p" + std::to_string(out.size()), r});
  return out;
}

std::vector<FeatureVector> blobs(std::size_t per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  const std::vector<std::vector<double>> centers{{0, 0, 0}, {5, 0, 0}, {0, 5, 0}, {0, 0, 5}};
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < per_blob; ++i) {
    for (const auto& c : centers) {
      std::vector<double> x(c);
      for (auto& v : x) v += noise(rng);
      out.push_back({"r" + std::to_string(out.size()), x});
    }
  }
  return out;
}

double sse_of(const std::vector<FeatureVector>& v, const std::vector<int>& assign, int k) {
  double sse = 0.0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> mean(v[0].x.size(), 0.0);
    int n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (assign[i] != c) continue;
      ++n;
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[i].x[d];
    }
    if (n == 0) return std::numeric_limits<double>::infinity();
    for (auto& m : mean) m /= n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (assign[i] == c) sse += squared_distance(v[i].x, mean);
    }
  }
  return sse;
}

std::vector<double> normalized(const synth::Template& t) {
  std::vector<double> out(t);
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= s;
  return out;
}

}  // namespace

TEST_CASE("k = 1 gives the mean and k = n gives zero sse") {
  const auto v = points({{0, 0}, {2, 0}, {0, 4}, {2, 4}});
  const auto one = kmeans(v, {.k = 1});
  REQUIRE(one.centroids.size() == 1);
  CHECK(one.centroids[0][0] == Approx(1.0));
  CHECK(one.centroids[0][1] == Approx(2.0));
  CHECK(one.sse == Approx(4 * 5.0));

  const auto all = kmeans(v, {.k = 4});
  CHECK(all.sse == Approx(0.0));
  auto sorted = all.assignment;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("toy set reaches the exhaustive optimum") {
  const auto v = points({{0.0, 0.0}, {0.5, 0.2}, {0.1, 0.6}, {6.0, 6.0}, {6.4, 5.7}});
  double best = std::numeric_limits<double>::infinity();
  // All labelings into two non-empty groups.
  for (int mask = 1; mask < 31; ++mask) {
    std::vector<int> a(5);
    for (int i = 0; i < 5; ++i) a[i] = (mask >> i) & 1;
    best = std::min(best, sse_of(v, a, 2));
  }
  const auto m = kmeans(v, {.k = 2, .seed = 7});
  CHECK(m.sse == Approx(best));
  CHECK(m.converged);
}

TEST_CASE("invalid arguments") {
  const auto v = points({{0.0}, {1.0}});
  CHECK_THROWS_AS(kmeans(v, {.k = 0}), ArgumentError);
  CHECK_THROWS_AS(kmeans(v, {.k = 3}), ArgumentError);
  CHECK_THROWS_AS(kmeans(points({{0.0}, {1.0, 2.0}}), {.k = 1}), ArgumentError);
  auto dup = v;
  dup[1].region_id = dup[0].region_id;
  CHECK_THROWS_AS(kmeans(dup, {.k = 1}), ArgumentError);
}

TEST_CASE("kmeans is deterministic, sse never rises and the result is a fixed point") {
  const auto v = blobs(20, 4);
  const auto a = kmeans(v, {.k = 4, .seed = 42});
  const auto b = kmeans(v, {.k = 4, .seed = 42});
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  CHECK(a.sse == b.sse);
  for (std::size_t i = 1; i < a.sse_history.size(); ++i) {
    CHECK(a.sse_history[i] <= a.sse_history[i - 1] + 1e-9);
  }
  const auto again = kmeans_from(v, a.centroids, {.k = 4});
  CHECK(again.assignment == a.assignment);
  CHECK(again.sse == Approx(a.sse));

  // Blobs are well separated, so the partition is exact.
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(a.assignment[i] == a.assignment[i % 4]);
}

TEST_CASE("mean silhouette and k selection on separated blobs") {
  const auto v = blobs(15, 8);
  const auto rows = select_k(v, {2, 3, 4, 5, 6}, 42);
  REQUIRE(rows.size() == 5);
  const auto best = std::max_element(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return x.mean_silhouette < y.mean_silhouette;
  });
  CHECK(best->k == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].sse <= rows[i - 1].sse + 1e-9);
  CHECK_THROWS_AS(select_k(v, {1}, 42), ArgumentError);
}

TEST_CASE("adjusted rand index") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(adjusted_rand_index(a, a) == Approx(1.0));
  CHECK(adjusted_rand_index(a, std::vector<int>{5, 5, 3, 3, 4, 4}) == Approx(1.0));
  CHECK(adjusted_rand_index(a, std::vector<int>{0, 1, 2, 0, 1, 2}) < 0.0);
  // Contingency of all ones: (0 - 2/3) / (2 - 2/3).
  CHECK(adjusted_rand_index(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1}) == Approx(-0.5));
}

TEST_CASE("comparing a model with itself or a relabeled copy matches every cluster at zero") {
  const auto v = blobs(10, 2);
  const auto m = kmeans(v, {.k = 4});
  const auto self = compare_models(m, m);
  REQUIRE(self.matches.size() == 4);
  for (const auto& match : self.matches) {
    CHECK(match.a == match.b);
    CHECK(match.distance == Approx(0.0));
  }
  auto permuted = m;
  std::reverse(permuted.centroids.begin(), permuted.centroids.end());
  const auto cmp = compare_models(m, permuted);
  for (const auto& match : cmp.matches) {
    CHECK(match.b == 3 - match.a);
    CHECK(match.distance == Approx(0.0));
  }
  auto other = m;
  other.types = {ActivityType::Sms};
  CHECK_THROWS_AS(compare_models(m, other), ArgumentError);
}

TEST_CASE("archetype templates get their functional labels") {
  const std::vector<ActivityType> calls{ActivityType::Calls};
  CHECK(label_cluster(normalized(synth::business_template()), calls) == ClusterLabel::Business);
  CHECK(label_cluster(normalized(synth::residential_template()), calls) == ClusterLabel::Residential);
  CHECK(label_cluster(normalized(synth::leisure_template()), calls) == ClusterLabel::Leisure);
  CHECK(label_cluster(normalized(synth::uniform_template()), calls) == ClusterLabel::Other);
  CHECK_THROWS_AS(label_cluster(synth::uniform_template(), calls), ArgumentError);

  const auto s = label_scores(normalized(synth::uniform_template()));
  CHECK(s.work == Approx(1.0));
  CHECK(s.evening == Approx(1.0));
  CHECK(s.weekend == Approx(1.0));
}

TEST_CASE("features concatenate normalized blocks in type order") {
  ProfileTable table;
  RegionProfiles p;
  for (auto t : kActivityTypes) {
    p[t].normalized = true;
    p[t].values.assign(kBinsPerWeek, 0.0);
    p[t].values[ordinal(t)] = 1.0;
  }
  table["0:0"] = p;
  RegionProfiles empty = p;
  empty[ActivityType::Sms].empty = true;
  table["0:1"] = empty;
  const std::vector<ActivityType> types{ActivityType::Sms, ActivityType::Calls};
  const auto f = build_features(table, types);
  REQUIRE(f.vectors.size() == 1);
  CHECK(f.skipped == std::vector<std::string>{"0:1"});
  CHECK(f.vectors[0].x.size() == 2 * kBinsPerWeek);
  CHECK(f.vectors[0].x[0] == 1.0);                 // CALLS block first
  CHECK(f.vectors[0].x[kBinsPerWeek + 1] == 1.0);  // then SMS
  CHECK_THROWS_AS(build_features(table, std::vector<ActivityType>{}), ArgumentError);
}
