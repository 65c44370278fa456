// citypulse command-line tool: synth, ingest, compute, serve, export.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "citypulse/api.hpp"
#include "citypulse/error.hpp"
#include "citypulse/pipeline.hpp"
#include "citypulse/store.hpp"
#include "citypulse/synth.hpp"

namespace fs = std::filesystem;
using namespace citypulse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("citypulse");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CITYPULSE_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      spdlog::warn("ignoring CITYPULSE_LOG={}", level);
    } else {
      spdlog::set_level(parsed);
    }
  }
}

std::set<std::string> split_weeks(const std::string& list) {
  std::set<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto end = comma == std::string::npos ? list.size() : comma;
    if (end > pos) out.insert(list.substr(pos, end - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void print_rejects(const char* what, const ingest::RejectReport& r) {
  if (r.count == 0) return;
  std::cerr << what << ": " << r.count << " rejected rows\n";
  for (std::size_t i = 0; i < r.errors.size() && i < 20; ++i) {
    std::cerr << "  line " << r.errors[i].line << ": " << r.errors[i].reason << '\n';
  }
}

int run_synth(const std::optional<std::string>& spec_path, const std::string& out, std::size_t shards) {
  auto spec = synth::default_scenario();
  if (spec_path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(store::read_file(*spec_path));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(*spec_path + ": " + e.what());
    }
    spec = synth::scenario_from_json(j);
  }
  const auto truth = synth::write_scenario(spec, out, shards);
  std::cout << "wrote " << spec.n_antennas << " antennas, " << truth.events.size()
            << " planted events to " << out << '\n';
  return kExitOk;
}

int run_ingest(const std::string& city, const std::string& data, const std::optional<std::string>& out,
               bool check) {
  const auto files = pipeline::InputFiles::discover(data, city.empty() ? std::nullopt
                                                                       : std::optional<fs::path>(city));
  const auto result = pipeline::ingest_city(files);
  print_rejects("antennas", result.report.antennas);
  print_rejects("activity", result.report.activity);
  const auto& agg = result.report.aggregate;
  std::cout << result.config.city_id << ": " << result.table.size() << " antennas, " << agg.records
            << " records in " << result.series.cells.size() << " cells";
  if (agg.unknown_antenna + agg.outside_period > 0) {
    std::cout << " (" << agg.unknown_antenna << " unknown antenna, " << agg.outside_period
              << " outside period)";
  }
  std::cout << '\n';
  if (check) return kExitOk;
  if (!out) throw CLI::ValidationError("--out", "required unless --check is given");
  const auto dir = pipeline::write_ingest_store(result, *out);
  std::cout << "store written to " << dir.string() << '\n';
  return kExitOk;
}

int run_compute(const std::string& store_root, const std::optional<std::string>& city_id,
                const pipeline::ComputeOptions& options) {
  const auto dir = fs::path(store_root) / store::resolve_city(store_root, city_id);
  const auto city = pipeline::load_city(dir);
  for (const auto& w : options.exclude_weeks) {
    if (!city.calendar->find_week(w)) spdlog::warn("week {} is not in the city period", w);
  }
  const auto computed = pipeline::compute_city(city, options);
  pipeline::write_full_store(city, computed, store_root);
  std::size_t n_events = 0;
  for (const auto& [id, r] : computed.regions) {
    for (const auto& list : r.events.v) n_events += list.size();
  }
  std::cout << city.config.city_id << ": " << computed.regions.size() << " regions, " << n_events
            << " events";
  if (computed.model) {
    std::cout << ", k=" << computed.model->k << " over " << computed.features.vectors.size()
              << " cells (sse " << computed.model->sse << ")";
  }
  std::cout << '\n';
  return kExitOk;
}

int run_serve(const std::string& store_root, const std::string& host, int port,
              const std::optional<std::string>& web) {
  const api::ApiService service(store_root);
  api::ServeOptions options;
  options.host = host;
  options.port = port;
  if (web) options.static_dir = *web;
  if (!api::serve(service, options)) {
    std::cerr << "cannot listen on " << host << ':' << port << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

int run_export(const std::string& store_root, const std::optional<std::string>& city_id,
               const std::string& what, const std::string& format, std::optional<std::size_t> k) {
  const auto dir = fs::path(store_root) / store::resolve_city(store_root, city_id);
  if (what == "events") {
    const auto text = store::read_file(dir / "events/events.jsonl");
    if (format == "jsonl") {
      std::cout << text;
      return kExitOk;
    }
    auto arr = nlohmann::json::array();
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      arr.push_back(nlohmann::json::parse(text.substr(pos, nl - pos)));
      pos = nl == std::string::npos ? text.size() : nl + 1;
    }
    std::cout << arr.dump() << '\n';
    return kExitOk;
  }
  if (format != "json") throw CLI::ValidationError("--format", "jsonl applies to events only");
  fs::path path;
  if (what == "clusters") {
    if (!k) {
      const auto meta = nlohmann::json::parse(store::read_file(dir / "meta.json"));
      if (!meta["compute"].is_object()) throw ValidationError("store has no computed clusters");
      k = meta["compute"]["k"].get<std::size_t>();
    }
    path = dir / pipeline::model_path(*k);
  } else if (what == "meta" || what == "regions" || what == "manifest") {
    path = dir / (what + ".json");
  } else {
    throw CLI::ValidationError("--what", "unknown export " + what);
  }
  if (!fs::exists(path)) throw ValidationError(path.string() + " is not in the store");
  std::cout << store::read_file(path) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"citypulse: city activity analytics over aggregated mobile network data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pipeline::kCodeVersion);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic city with ground truth");
  std::optional<std::string> spec_path;
  std::string synth_out;
  std::size_t shards = 1;
  synth_cmd->add_option("--spec", spec_path, "Scenario JSON (defaults to the built-in scenario)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--shards", shards, "Number of activity-NNN.csv shards")->check(CLI::PositiveNumber);

  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and aggregate the ingest files");
  std::string city_path;
  std::string data_dir;
  std::optional<std::string> ingest_out;
  bool check = false;
  ingest_cmd->add_option("--city", city_path, "city.json (defaults to DATA/city.json)");
  ingest_cmd->add_option("--data", data_dir, "Directory with antennas.csv and activity CSVs")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--out", ingest_out, "Store root");
  ingest_cmd->add_flag("--check", check, "Validate only, write nothing");

  auto* compute_cmd = app.add_subcommand("compute", "Compute profiles, events, clusters and density");
  std::string compute_store;
  std::optional<std::string> compute_city;
  std::string types = "CALLS,SMS,DATA_DOWN,DATA_UP,DATA_REQUESTS";
  std::string exclude;
  pipeline::ComputeOptions options;
  compute_cmd->add_option("--store", compute_store, "Store root")->required();
  compute_cmd->add_option("--city", compute_city, "City id when the store holds several");
  compute_cmd->add_option("--k", options.k, "Number of clusters")->check(CLI::PositiveNumber);
  compute_cmd->add_option("--types", types, "Activity types used for clustering");
  compute_cmd->add_option("--exclude-weeks", exclude, "ISO weeks left out of typical weeks");
  compute_cmd->add_option("--seed", options.seed, "k-means seed");
  compute_cmd->add_option("--threshold", options.detect.threshold_z, "Event z threshold")
      ->check(CLI::PositiveNumber);
  compute_cmd->add_option("--min-duration", options.detect.min_duration, "Minimum event windows");

  auto* serve_cmd = app.add_subcommand("serve", "Serve a store over the read-only JSON API");
  std::string serve_store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> web;
  serve_cmd->add_option("--store", serve_store, "Store root")->required();
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--web", web, "Static web bundle mounted at /")->check(CLI::ExistingDirectory);

  auto* export_cmd = app.add_subcommand("export", "Print a stored artifact");
  std::string export_store;
  std::optional<std::string> export_city;
  std::string what;
  std::string format = "json";
  std::optional<std::size_t> export_k;
  export_cmd->add_option("--store", export_store, "Store root")->required();
  export_cmd->add_option("--city", export_city, "City id when the store holds several");
  export_cmd->add_option("--what", what, "clusters, events, meta, regions or manifest")->required();
  export_cmd->add_option("--format", format, "json, or jsonl for events")
      ->check(CLI::IsMember({"json", "jsonl"}));
  export_cmd->add_option("--k", export_k, "Cluster model to export");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(spec_path, synth_out, shards);
    if (*ingest_cmd) return run_ingest(city_path, data_dir, ingest_out, check);
    if (*compute_cmd) {
      try {
        options.types = parse_activity_types(types);
      } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--types", e.what());
      }
      options.exclude_weeks = split_weeks(exclude);
      return run_compute(compute_store, compute_city, options);
    }
    if (*serve_cmd) return run_serve(serve_store, host, port, web);
    if (*export_cmd) return run_export(export_store, export_city, what, format, export_k);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
