#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/config.hpp"
#include "citypulse/spatial.hpp"
#include "citypulse/time.hpp"

namespace citypulse::api {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using Query = std::map<std::string, std::string>;

/// Read-only JSON API over a store root. Stored artifacts are returned
/// byte-for-byte; views with a sub-range, another resolution or a second
/// city are computed from stored series and models. The service holds no
/// mutable state, so concurrent calls are safe.
///
///   /api/cities
///   /api/cities/{c}/meta
///   /api/cities/{c}/regions
///   /api/cities/{c}/regions/{r}/series?type&res&from&to
///   /api/cities/{c}/regions/{r}/typicalweek?type&normalized
///   /api/cities/{c}/regions/{r}/residuals?type
///   /api/cities/{c}/regions/{r}/events?type
///   /api/cities/{c}/clusters?k
///   /api/cities/{c}/clusters/{k}/compare?other_city&other_k
///   /api/cities/{c}/density?metric&type&other&from&to
///
/// `type` defaults to CALLS. Errors are {"error": {"code", "message"},
/// "store_version"} with a 4xx status.
class ApiService {
 public:
  /// Throws std::runtime_error when the root holds no built city.
  explicit ApiService(const std::filesystem::path& store_root);
  ~ApiService();

  /// `path` is already percent-decoded.
  Response handle(std::string_view path, const Query& query = {}) const;

  std::vector<std::string> city_ids() const;

 private:
  struct City;
  const City* find_city(const std::string& id) const;
  Response city_route(const City& city, const std::vector<std::string>& parts,
                      const Query& query) const;
  Response region_route(const City& city, const std::string& region, const std::string& view,
                        const Query& query) const;
  Response clusters_route(const City& city, const std::vector<std::string>& parts,
                          const Query& query) const;
  Response density_route(const City& city, const Query& query) const;

  std::filesystem::path root_;
  std::map<std::string, std::unique_ptr<City>> cities_;
};

/// Builds a JSON error response.
Response error_response(int status, std::string_view code, std::string_view message);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;  // mounted at "/" when given
};

/// Blocks serving `service` over HTTP until the process is stopped.
/// Returns false when the socket cannot be bound.
bool serve(const ApiService& service, const ServeOptions& options);

}  // namespace citypulse::api
