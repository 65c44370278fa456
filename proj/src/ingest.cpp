#include "citypulse/ingest.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <set>
#include <unordered_set>
#include <utility>

#include "citypulse/time.hpp"

namespace citypulse::ingest {

namespace {

constexpr std::string_view kUtf8Bom = "\xEF\xBB\xBF";

std::string_view strip_bom(std::string_view s) {
  if (s.substr(0, kUtf8Bom.size()) == kUtf8Bom) s.remove_prefix(kUtf8Bom.size());
  return s;
}

// Splits into exactly N comma-separated fields.
template <std::size_t N>
bool split_fields(std::string_view line, std::array<std::string_view, N>& fields) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto comma = line.find(',', pos);
    if (i + 1 < N) {
      if (comma == std::string_view::npos) return false;
      fields[i] = line.substr(pos, comma - pos);
      pos = comma + 1;
    } else {
      if (comma != std::string_view::npos) return false;
      fields[i] = line.substr(pos);
    }
  }
  return true;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

void RejectReport::add(std::size_t line, std::string reason) {
  ++count;
  if (errors.size() < kMaxDetailedErrors) errors.push_back({line, std::move(reason)});
}

LineReader::LineReader(std::istream& in, std::size_t buffer_size)
    : in_(in), buf_(buffer_size) {}

bool LineReader::refill() {
  if (eof_) return false;
  in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  begin_ = 0;
  end_ = got;
  if (got < buf_.size()) eof_ = true;
  return got > 0;
}

bool LineReader::next(std::string_view& line) {
  bool carrying = false;
  carry_.clear();
  for (;;) {
    if (begin_ < end_) {
      const char* start = buf_.data() + begin_;
      const auto* nl = static_cast<const char*>(std::memchr(start, '\n', end_ - begin_));
      if (nl != nullptr) {
        const auto len = static_cast<std::size_t>(nl - start);
        begin_ += len + 1;
        if (carrying) {
          carry_.append(start, len);
          line = carry_;
        } else {
          line = std::string_view(start, len);
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no_;
        return true;
      }
      carry_.append(start, end_ - begin_);
      carrying = true;
      begin_ = end_;
    }
    if (!refill()) {
      if (carrying && !carry_.empty()) {
        line = carry_;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no_;
        return true;
      }
      return false;
    }
  }
}

AntennaParse parse_antennas(std::istream& in, const std::optional<BoundingBox>& bbox) {
  LineReader lines(in);
  std::string_view line;
  if (!lines.next(line) || strip_bom(line) != kAntennaHeader) {
    throw ValidationError("antennas.csv: missing header '" + std::string(kAntennaHeader) + "'");
  }
  AntennaParse result;
  std::unordered_set<std::string> seen;
  std::array<std::string_view, 3> f;
  while (lines.next(line)) {
    if (line.empty()) continue;
    ++result.data_rows;
    const auto line_no = lines.line_number();
    if (!split_fields(line, f)) {
      result.rejected.add(line_no, "expected 3 fields");
      continue;
    }
    Antenna a;
    if (f[0].empty()) {
      result.rejected.add(line_no, "empty antenna_id");
      continue;
    }
    if (!parse_double(f[1], a.lat) || !parse_double(f[2], a.lon)) {
      result.rejected.add(line_no, "non-numeric coordinate");
      continue;
    }
    if (a.lat < -90.0 || a.lat > 90.0 || a.lon < -180.0 || a.lon > 180.0) {
      result.rejected.add(line_no, "coordinate out of range");
      continue;
    }
    a.antenna_id = std::string(f[0]);
    if (bbox && !bbox->contains(a.lat, a.lon)) {
      result.rejected.add(line_no, "outside bbox: " + a.antenna_id);
      continue;
    }
    if (!seen.insert(a.antenna_id).second) {
      result.rejected.add(line_no, "duplicate antenna_id: " + a.antenna_id);
      continue;
    }
    result.antennas.push_back(std::move(a));
  }
  return result;
}

std::optional<std::string> parse_activity_row(std::string_view line, ActivityRecord& out) {
  std::array<std::string_view, 7> f;
  if (!split_fields(line, f)) return "expected 7 fields";
  if (f[0].empty()) return "empty antenna_id";
  const auto ts = parse_utc_timestamp(f[1]);
  if (!ts) return "malformed timestamp";
  if (!is_window_aligned(*ts)) return "unaligned window";
  for (std::size_t i = 0; i < kNumActivityTypes; ++i) {
    const auto field = f[i + 2];
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
      return "malformed counter";
    }
    if (v < 0) return "negative counter";
    out.counts.v[i] = v;
  }
  out.antenna_id.assign(f[0]);
  out.window_start = *ts;
  return std::nullopt;
}

ActivityReader::ActivityReader(std::istream& in) : lines_(in) {
  std::string_view header;
  if (!lines_.next(header) || strip_bom(header) != kActivityHeader) {
    throw ValidationError("activity.csv: missing header '" + std::string(kActivityHeader) + "'");
  }
}

bool ActivityReader::next(ActivityRecord& out) {
  std::string_view line;
  while (lines_.next(line)) {
    if (line.empty()) continue;
    ++data_rows_;
    if (auto err = parse_activity_row(line, out)) {
      rejected_.add(lines_.line_number(), std::move(*err));
      continue;
    }
    ++accepted_;
    return true;
  }
  return false;
}

DuplicateRecordError::DuplicateRecordError(std::string antenna_id, Timestamp window)
    : ValidationError("duplicate record for antenna " + antenna_id + " at window " +
                      format_utc_timestamp(window)),
      antenna_id_(std::move(antenna_id)),
      window_(window) {}

ActivityParse parse_activity(std::istream& in) {
  ActivityReader reader(in);
  ActivityParse result;
  std::set<std::pair<std::string, std::int64_t>> keys;
  ActivityRecord rec;
  std::optional<std::pair<std::string, Timestamp>> duplicate;
  while (reader.next(rec)) {
    if (!keys.emplace(rec.antenna_id, rec.window_start.time_since_epoch().count()).second &&
        !duplicate) {
      duplicate.emplace(rec.antenna_id, rec.window_start);
    }
    result.records.push_back(rec);
  }
  // Duplicates are fatal, but only once the whole stream has been read.
  if (duplicate) throw DuplicateRecordError(duplicate->first, duplicate->second);
  result.rejected = reader.rejected();
  result.data_rows = reader.data_rows();
  return result;
}

void append_activity_row(std::string& out, const ActivityRecord& r) {
  out.append(r.antenna_id);
  out.push_back(',');
  append_utc_timestamp(out, r.window_start);
  char buf[24];
  for (const auto v : r.counts.v) {
    out.push_back(',');
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
  }
  out.push_back('\n');
}

std::string format_activity_row(const ActivityRecord& record) {
  std::string out;
  append_activity_row(out, record);
  out.pop_back();
  return out;
}

void append_antenna_row(std::string& out, const Antenna& a) {
  char buf[32];
  out.append(a.antenna_id);
  out.push_back(',');
  auto [p1, e1] = std::to_chars(buf, buf + sizeof buf, a.lat);
  out.append(buf, p1);
  out.push_back(',');
  auto [p2, e2] = std::to_chars(buf, buf + sizeof buf, a.lon);
  out.append(buf, p2);
  out.push_back('\n');
}

}  // namespace citypulse::ingest
