#include "citypulse/store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace citypulse::store {

namespace fs = std::filesystem;

struct Sha256::State {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : state_(std::make_unique<State>()) {
  state_->ctx = EVP_MD_CTX_new();
  if (state_->ctx == nullptr || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: initialization failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(state_->ctx); }

void Sha256::update(const void* data, std::size_t size) {
  if (size > 0) EVP_DigestUpdate(state_->ctx, data, size);
}

std::string Sha256::hex_digest() {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(state_->ctx, md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data);
  return h.hex_digest();
}

std::string sha256_file(const fs::path& path) {
  HashingFileBuf buf(path);
  return buf.finish();
}

HashingFileBuf::HashingFileBuf(const fs::path& path, std::size_t buffer_size)
    : buffer_(buffer_size) {
  file_ = std::fopen(path.c_str(), "rb");
  if (file_ == nullptr) throw std::runtime_error("cannot open " + path.string());
}

HashingFileBuf::~HashingFileBuf() {
  if (file_ != nullptr) std::fclose(file_);
}

HashingFileBuf::int_type HashingFileBuf::underflow() {
  if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
  const auto got = std::fread(buffer_.data(), 1, buffer_.size(), file_);
  if (got == 0) return traits_type::eof();
  hash_.update(buffer_.data(), got);
  setg(buffer_.data(), buffer_.data(), buffer_.data() + got);
  return traits_type::to_int_type(*gptr());
}

std::streamsize HashingFileBuf::xsgetn(char* s, std::streamsize n) {
  std::streamsize done = 0;
  // Drain the buffer first, then read straight into the caller's memory.
  const auto buffered = std::min<std::streamsize>(n, egptr() - gptr());
  if (buffered > 0) {
    std::memcpy(s, gptr(), static_cast<std::size_t>(buffered));
    gbump(static_cast<int>(buffered));
    done = buffered;
  }
  while (done < n) {
    const auto got = std::fread(s + done, 1, static_cast<std::size_t>(n - done), file_);
    if (got == 0) break;
    hash_.update(s + done, got);
    done += static_cast<std::streamsize>(got);
  }
  return done;
}

std::string HashingFileBuf::finish() {
  setg(nullptr, nullptr, nullptr);
  while (true) {
    const auto got = std::fread(buffer_.data(), 1, buffer_.size(), file_);
    if (got == 0) break;
    hash_.update(buffer_.data(), got);
  }
  return hash_.hex_digest();
}

std::string url_safe_key(std::string_view key) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(key.size());
  for (const char ch : key) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
        c == '_' || c == '-') {
      out.push_back(ch);
    } else if (c == ':') {
      out.push_back('-');
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  if (out == "." || out == "..") out = "%2E" + out.substr(1);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string out;
  in.seekg(0, std::ios::end);
  out.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  return out;
}

StoreWriter::StoreWriter(const fs::path& root, const std::string& city_id)
    : final_(root / url_safe_key(city_id)) {
  fs::create_directories(root);
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = root / ("." + url_safe_key(city_id) + ".staging-" + std::to_string(rd() % 1000000));
    if (fs::create_directory(candidate)) {
      staging_ = std::move(candidate);
      return;
    }
  }
  throw std::runtime_error("cannot create a staging directory under " + root.string());
}

StoreWriter::~StoreWriter() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StoreWriter::write(const std::string& relative, std::string_view content) {
  const auto path = staging_ / relative;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
  digests_[relative] = sha256_hex(content);
}

void StoreWriter::write_json(const std::string& relative, const nlohmann::json& j) {
  write(relative, j.dump());
}

void StoreWriter::commit(nlohmann::json manifest) {
  manifest["artifacts"] = digests_;
  write("manifest.json", manifest.dump(2));
  std::error_code ec;
  fs::path previous;
  if (fs::exists(final_)) {
    previous = staging_.string() + ".old";
    fs::rename(final_, previous);
  }
  fs::rename(staging_, final_);
  committed_ = true;
  if (!previous.empty()) fs::remove_all(previous, ec);
}

std::vector<std::string> list_cities(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.empty() || name.front() == '.') continue;
    if (fs::exists(entry.path() / "manifest.json")) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string resolve_city(const fs::path& root, const std::optional<std::string>& city) {
  const auto cities = list_cities(root);
  if (city) {
    if (std::find(cities.begin(), cities.end(), url_safe_key(*city)) == cities.end()) {
      throw std::runtime_error("city " + *city + " not found in " + root.string());
    }
    return url_safe_key(*city);
  }
  if (cities.empty()) throw std::runtime_error("no city store under " + root.string());
  if (cities.size() > 1) throw std::runtime_error("store holds several cities; pass --city");
  return cities.front();
}

}  // namespace citypulse::store
