#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "citypulse/api.hpp"
#include "citypulse/codec.hpp"
#include "citypulse/error.hpp"
#include "citypulse/pipeline.hpp"
#include "citypulse/store.hpp"
#include "citypulse/synth.hpp"
#include "fixtures.hpp"

using namespace citypulse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

synth::ScenarioSpec tiny_spec() {
  auto spec = synth::default_scenario();
  spec.n_antennas = 60;
  spec.city.period_end = spec.city.period_start + std::chrono::days{21};
  spec.holidays.clear();
  spec.events.clear();
  return spec;
}

// One built store shared by the API cases.
struct Built {
  fixtures::TempDir tmp;
  fs::path data = tmp.path / "data";
  fs::path root = tmp.path / "store";
  fs::path city_dir;

  Built() {
    synth::write_scenario(tiny_spec(), data);
    pipeline::ComputeOptions opt;
    opt.k = 3;
    city_dir = pipeline::build_store(pipeline::InputFiles::discover(data), opt, root);
  }
};

Built& built() {
  static Built b;
  return b;
}

json body_json(const api::Response& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("sha256 of known inputs") {
  CHECK(store::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(store::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("url safe keys") {
  CHECK(store::url_safe_key("12:7") == "12-7");
  CHECK(store::url_safe_key("north_bank.2") == "north_bank.2");
  CHECK(store::url_safe_key("a b/c") == "a%20b%2Fc");
}

TEST_CASE("hashing file buffer matches a direct digest") {
  fixtures::TempDir tmp;
  const auto path = tmp.path / "x.txt";
  std::string content;
  for (int i = 0; i < 100000; ++i) content += std::to_string(i) + "\n";
  std::ofstream(path, std::ios::binary) << content;
  store::HashingFileBuf buf(path, 4096);
  std::istream in(&buf);
  std::string line;
  std::getline(in, line);  // read a little, then finish
  CHECK(buf.finish() == store::sha256_hex(content));
  CHECK(store::sha256_file(path) == store::sha256_hex(content));
}

TEST_CASE("codec round trips reproduce the same bytes") {
  auto& b = built();
  const auto data = pipeline::load_city(b.city_dir);
  const auto& region = data.series.cells.begin()->second;
  const auto j = codec::series_to_json(region, ActivityType::Sms, data.axis());
  spatial::RegionSeries back(region.region_id, data.axis().size());
  codec::series_from_json(j, back, ActivityType::Sms, data.axis());
  CHECK(codec::series_to_json(back, ActivityType::Sms, data.axis()).dump() == j.dump());

  const auto model_file = store::read_file(b.city_dir / pipeline::model_path(3));
  CHECK(codec::model_to_json(codec::model_from_json(json::parse(model_file))).dump() == model_file);

  const auto density_file =
      store::read_file(b.city_dir / pipeline::density_path(density::Metric::Volume, ActivityType::Calls));
  CHECK(codec::density_to_json(codec::density_from_json(json::parse(density_file))).dump() == density_file);

  const auto residual_file =
      store::read_file(b.city_dir / pipeline::residuals_path("city", ActivityType::Calls));
  CHECK(codec::residuals_to_json(codec::residuals_from_json(json::parse(residual_file))).dump() ==
        residual_file);
}

TEST_CASE("manifest digests match the files and a rebuild is byte-identical") {
  auto& b = built();
  const auto manifest_text = store::read_file(b.city_dir / "manifest.json");
  const auto manifest = json::parse(manifest_text);
  CHECK(manifest["store_version"] == store::kStoreVersion);
  std::size_t checked = 0;
  for (const auto& [path, digest] : manifest["artifacts"].items()) {
    if (++checked % 25 == 0) CHECK(store::sha256_file(b.city_dir / path) == digest.get<std::string>());
  }
  CHECK(checked > 100);

  fixtures::TempDir other;
  pipeline::ComputeOptions opt;
  opt.k = 3;
  const auto again = pipeline::build_store(pipeline::InputFiles::discover(b.data), opt, other.path);
  CHECK(store::read_file(again / "manifest.json") == manifest_text);
}

TEST_CASE("a failed build leaves no city directory behind") {
  fixtures::TempDir tmp;
  auto spec = tiny_spec();
  spec.n_antennas = 4;
  synth::write_scenario(spec, tmp.path / "data");
  const auto activity = tmp.path / "data" / "activity.csv";
  std::string text = store::read_file(activity);
  const auto first = text.find('\n') + 1;
  text += text.substr(first, text.find('\n', first) + 1 - first);  // duplicate first record
  std::ofstream(activity, std::ios::binary | std::ios::trunc) << text;

  const auto root = tmp.path / "store";
  CHECK_THROWS_AS(pipeline::build_store(pipeline::InputFiles::discover(tmp.path / "data"), {}, root),
                  ingest::DuplicateRecordError);
  CHECK((!fs::exists(root) || fs::is_empty(root)));
}

TEST_CASE("api serves stored artifacts byte for byte") {
  auto& b = built();
  const api::ApiService service(b.root);
  const std::string base = "/api/cities/synthcity";
  CHECK(service.city_ids() == std::vector<std::string>{"synthcity"});

  const auto cities = body_json(service.handle("/api/cities"));
  CHECK(cities.dump().find("synthcity") != std::string::npos);

  CHECK(service.handle(base + "/meta").body == store::read_file(b.city_dir / "meta.json"));
  CHECK(service.handle(base + "/regions").body == store::read_file(b.city_dir / "regions.json"));

  const std::string region = pipeline::load_city(b.city_dir).series.cells.begin()->first;
  for (auto t : kActivityTypes) {
    const api::Query q{{"type", std::string(to_string(t))}};
    CHECK(service.handle(base + "/regions/" + region + "/series", q).body ==
          store::read_file(b.city_dir / pipeline::series_path(region, t)));
    CHECK(service.handle(base + "/regions/" + region + "/residuals", q).body ==
          store::read_file(b.city_dir / pipeline::residuals_path(region, t)));
    CHECK(service.handle(base + "/regions/" + region + "/events", q).body ==
          store::read_file(b.city_dir / pipeline::events_path(region, t)));
    CHECK(service.handle(base + "/regions/city/typicalweek", q).body ==
          store::read_file(b.city_dir / pipeline::profile_path("city", t, false)));
  }
  CHECK(service.handle(base + "/regions/city/typicalweek", {{"normalized", "true"}}).body ==
        store::read_file(b.city_dir / pipeline::profile_path("city", ActivityType::Calls, true)));
  CHECK(service.handle(base + "/clusters", {{"k", "3"}}).body ==
        store::read_file(b.city_dir / pipeline::model_path(3)));
  CHECK(service.handle(base + "/density", {{"metric", "ratio"}, {"type", "SMS"}}).body ==
        store::read_file(b.city_dir / pipeline::density_path(density::Metric::Ratio, ActivityType::Sms)));
}

TEST_CASE("api derived views") {
  auto& b = built();
  const api::ApiService service(b.root);
  const std::string base = "/api/cities/synthcity";

  const auto hourly = body_json(service.handle(base + "/regions/city/series", {{"res", "hour"}}));
  CHECK(hourly["resolution"] == "hour");
  CHECK(hourly["values"].size() == 21 * 24);

  const auto ranged = body_json(service.handle(
      base + "/regions/city/series",
      {{"from", "2013-04-02T00:00:00Z"}, {"to", "2013-04-03T00:00:00Z"}}));
  CHECK(ranged["values"].size() == 96);

  const auto pair = body_json(service.handle(base + "/density", {{"metric", "pair_ratio"}, {"other", "SMS"}}));
  CHECK(pair["metric"] == "pair_ratio");

  const auto cmp = service.handle(base + "/clusters/3/compare", {{"other_city", "synthcity"}, {"other_k", "3"}});
  REQUIRE(cmp.status == 200);
  for (const auto& m : body_json(cmp)["matches"]) CHECK(m["distance"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("api errors") {
  auto& b = built();
  const api::ApiService service(b.root);
  const std::string base = "/api/cities/synthcity";
  auto code = [](const api::Response& r) { return json::parse(r.body)["error"]["code"].get<std::string>(); };

  auto r = service.handle("/api/cities/atlantis/meta");
  CHECK(r.status == 404);
  CHECK(code(r) == "city_not_found");
  CHECK(json::parse(r.body)["store_version"] == store::kStoreVersion);

  r = service.handle(base + "/regions/99:99/series");
  CHECK(r.status == 404);
  CHECK(code(r) == "region_not_found");

  r = service.handle(base + "/regions/city/series", {{"type", "FAX"}});
  CHECK(r.status == 400);
  CHECK(code(r) == "invalid_parameter");

  r = service.handle(base + "/regions/city/series", {{"res", "fortnight"}});
  CHECK(r.status == 400);

  r = service.handle(base + "/clusters", {{"k", "7"}});
  CHECK(r.status == 404);
  CHECK(code(r) == "clusters_not_found");

  r = service.handle(base + "/nothing");
  CHECK(r.status == 404);
  CHECK(code(r) == "not_found");
}
