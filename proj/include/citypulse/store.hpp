#pragma once

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <streambuf>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace citypulse::store {

/// On-disk layout version, reported with every API response.
inline constexpr int kStoreVersion = 1;

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size);
  void update(std::string_view s) { update(s.data(), s.size()); }
  /// Lower-case hex digest. The hasher cannot be updated afterwards.
  std::string hex_digest();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Read-only file stream buffer that hashes every byte it hands out.
class HashingFileBuf : public std::streambuf {
 public:
  explicit HashingFileBuf(const std::filesystem::path& path, std::size_t buffer_size = 1 << 20);
  ~HashingFileBuf() override;
  HashingFileBuf(const HashingFileBuf&) = delete;
  HashingFileBuf& operator=(const HashingFileBuf&) = delete;

  /// Digest of everything read so far; reads the remainder of the file first
  /// so the digest always covers the whole file.
  std::string finish();

 protected:
  int_type underflow() override;
  std::streamsize xsgetn(char* s, std::streamsize n) override;

 private:
  std::FILE* file_ = nullptr;
  std::vector<char> buffer_;
  Sha256 hash_;
};

/// File-name-safe form of an object key: [A-Za-z0-9._-] pass through, ':'
/// becomes '-', every other byte is written as %XX.
std::string url_safe_key(std::string_view key);

/// Reads a whole file; throws std::runtime_error if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Builds a city directory under a temporary name and swaps it into place
/// on commit(). Without a commit the partial directory is removed.
class StoreWriter {
 public:
  StoreWriter(const std::filesystem::path& root, const std::string& city_id);
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  /// Writes `content` to `relative` inside the city directory and records
  /// its digest for the manifest.
  void write(const std::string& relative, std::string_view content);
  void write_json(const std::string& relative, const nlohmann::json& j);

  /// Artifact path -> SHA-256, sorted by path.
  const std::map<std::string, std::string>& digests() const noexcept { return digests_; }

  /// Writes manifest.json (with the artifact digests under "artifacts") and
  /// atomically replaces any previous city directory.
  void commit(nlohmann::json manifest);

  const std::filesystem::path& staging_dir() const noexcept { return staging_; }
  const std::filesystem::path& final_dir() const noexcept { return final_; }

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  std::map<std::string, std::string> digests_;
  bool committed_ = false;
};

/// Cities present under a store root (directories holding a manifest.json),
/// sorted by id.
std::vector<std::string> list_cities(const std::filesystem::path& root);

/// Picks the city of a store root: `city` when given, otherwise the only
/// city present. Throws std::runtime_error when ambiguous or missing.
std::string resolve_city(const std::filesystem::path& root, const std::optional<std::string>& city);

}  // namespace citypulse::store
