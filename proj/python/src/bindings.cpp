#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "citypulse/api.hpp"
#include "citypulse/clusters.hpp"
#include "citypulse/error.hpp"
#include "citypulse/pipeline.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/store.hpp"
#include "citypulse/synth.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace citypulse;

namespace {

std::vector<clusters::FeatureVector> to_vectors(const std::vector<std::vector<double>>& rows,
                                                std::optional<std::vector<std::string>> ids) {
  std::vector<clusters::FeatureVector> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({ids ? ids->at(i) : std::to_string(i), rows[i]});
  }
  return out;
}

py::dict model_dict(const clusters::ClusterModel& m) {
  py::dict d;
  d["k"] = m.k;
  d["seed"] = m.seed;
  d["centroids"] = m.centroids;
  d["region_ids"] = m.region_ids;
  d["assignment"] = m.assignment;
  d["sse"] = m.sse;
  d["iterations"] = m.iterations;
  d["converged"] = m.converged;
  d["sse_history"] = m.sse_history;
  return d;
}

pipeline::ComputeOptions compute_options(std::size_t k, const std::string& types,
                                         const std::vector<std::string>& exclude_weeks,
                                         std::uint64_t seed) {
  pipeline::ComputeOptions o;
  o.k = k;
  o.types = parse_activity_types(types);
  o.exclude_weeks = {exclude_weeks.begin(), exclude_weeks.end()};
  o.seed = seed;
  return o;
}

std::string summary_json(const pipeline::CityData& city) {
  const auto& r = city.report;
  return nlohmann::json{{"city_id", city.config.city_id},
                        {"cells", city.series.cells.size()},
                        {"records", r.aggregate.records},
                        {"antennas_rejected", r.antennas.count},
                        {"activity_rejected", r.activity.count},
                        {"unknown_antenna", r.aggregate.unknown_antenna},
                        {"outside_period", r.aggregate.outside_period},
                        {"inputs", r.input_digests}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "citypulse native core";
  m.attr("__version__") = pipeline::kCodeVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  m.def("activity_types", [] {
    std::vector<std::string> out;
    for (const auto t : kActivityTypes) out.emplace_back(to_string(t));
    return out;
  });

  m.def("default_scenario_json", [] { return synth::to_json(synth::default_scenario()).dump(); });

  m.def(
      "write_scenario",
      [](const std::optional<std::string>& spec_json, const fs::path& out, std::size_t shards) {
        const auto spec = spec_json ? synth::scenario_from_json(nlohmann::json::parse(*spec_json))
                                    : synth::default_scenario();
        py::gil_scoped_release release;
        return synth::to_json(synth::write_scenario(spec, out, shards)).dump();
      },
      py::arg("spec_json") = py::none(), py::arg("out"), py::arg("shards") = 1,
      "Writes a synthetic city and returns its ground truth as JSON text.");

  m.def(
      "ingest",
      [](const fs::path& data_dir, const std::optional<fs::path>& out,
         const std::optional<fs::path>& city) {
        py::gil_scoped_release release;
        const auto files = pipeline::InputFiles::discover(data_dir, city);
        const auto data = pipeline::ingest_city(files);
        if (out) pipeline::write_ingest_store(data, *out);
        return summary_json(data);
      },
      py::arg("data_dir"), py::arg("out") = py::none(), py::arg("city") = py::none(),
      "Validates and aggregates ingest files; writes a store when `out` is given.");

  m.def(
      "compute",
      [](const fs::path& store_root, const std::optional<std::string>& city, std::size_t k,
         const std::string& types, const std::vector<std::string>& exclude_weeks,
         std::uint64_t seed) {
        const auto options = compute_options(k, types, exclude_weeks, seed);
        py::gil_scoped_release release;
        const auto dir = store_root / store::resolve_city(store_root, city);
        const auto data = pipeline::load_city(dir);
        const auto computed = pipeline::compute_city(data, options);
        return pipeline::write_full_store(data, computed, store_root);
      },
      py::arg("store_root"), py::arg("city") = py::none(), py::arg("k") = 5,
      py::arg("types") = "CALLS,SMS,DATA_DOWN,DATA_UP,DATA_REQUESTS",
      py::arg("exclude_weeks") = std::vector<std::string>{}, py::arg("seed") = 42);

  m.def(
      "build_store",
      [](const fs::path& data_dir, const fs::path& out, std::size_t k, const std::string& types,
         const std::vector<std::string>& exclude_weeks, std::uint64_t seed) {
        const auto options = compute_options(k, types, exclude_weeks, seed);
        py::gil_scoped_release release;
        return pipeline::build_store(pipeline::InputFiles::discover(data_dir), options, out);
      },
      py::arg("data_dir"), py::arg("out"), py::arg("k") = 5,
      py::arg("types") = "CALLS,SMS,DATA_DOWN,DATA_UP,DATA_REQUESTS",
      py::arg("exclude_weeks") = std::vector<std::string>{}, py::arg("seed") = 42);

  m.def(
      "kmeans",
      [](const std::vector<std::vector<double>>& rows, std::size_t k, std::uint64_t seed,
         std::size_t max_iter, double tol, std::optional<std::vector<std::string>> ids) {
        clusters::KMeansOptions o;
        o.k = k;
        o.seed = seed;
        o.max_iter = max_iter;
        o.tol = tol;
        return model_dict(clusters::kmeans(to_vectors(rows, std::move(ids)), o));
      },
      py::arg("rows"), py::arg("k"), py::arg("seed") = 42, py::arg("max_iter") = 300,
      py::arg("tol") = 1e-6, py::arg("ids") = py::none());

  m.def(
      "adjusted_rand_index",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return clusters::adjusted_rand_index(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "label_cluster",
      [](const std::vector<double>& centroid, const std::string& types) {
        const auto parsed = parse_activity_types(types);
        return std::string(clusters::to_string(clusters::label_cluster(centroid, parsed)));
      },
      py::arg("centroid"), py::arg("types") = "CALLS");

  py::class_<spatial::Grid>(m, "Grid")
      .def(py::init([](double lat_min, double lon_min, double lat_max, double lon_max,
                       double cell_size_m) {
             CityConfig c;
             c.city_id = "grid";
             c.bbox = {lat_min, lon_min, lat_max, lon_max};
             c.cell_size_m = cell_size_m;
             c.period_end = c.period_start + std::chrono::days{7};
             return spatial::build_grid(c);
           }),
           py::arg("lat_min"), py::arg("lon_min"), py::arg("lat_max"), py::arg("lon_max"),
           py::arg("cell_size_m") = kDefaultCellSizeMeters)
      .def_property_readonly("n_rows", &spatial::Grid::n_rows)
      .def_property_readonly("n_cols", &spatial::Grid::n_cols)
      .def("locate",
           [](const spatial::Grid& g, double lat, double lon) -> std::optional<std::pair<int, int>> {
             const auto c = g.locate(lat, lon);
             if (!c) return std::nullopt;
             return std::make_pair(c->row, c->col);
           });

  py::class_<api::ApiService>(m, "ApiService")
      .def(py::init<const fs::path&>(), py::arg("store_root"))
      .def("city_ids", &api::ApiService::city_ids)
      .def(
          "get",
          [](const api::ApiService& s, const std::string& path, const api::Query& query) {
            api::Response r;
            {
              py::gil_scoped_release release;
              r = s.handle(path, query);
            }
            return py::make_tuple(r.status, py::bytes(r.body));
          },
          py::arg("path"), py::arg("query") = api::Query{},
          "Returns (status, body bytes) for a GET request.");
}
