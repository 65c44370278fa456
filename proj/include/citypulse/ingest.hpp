#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citypulse/activity.hpp"
#include "citypulse/config.hpp"
#include "citypulse/error.hpp"

namespace citypulse::ingest {

inline constexpr std::string_view kAntennaHeader = "antenna_id,lat,lon";
inline constexpr std::string_view kActivityHeader =
    "antenna_id,window_start,calls,sms,data_down,data_up,data_requests";

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;

  friend bool operator==(const RowError&, const RowError&) = default;
};

/// Rejected-row bookkeeping. Only the first `kMaxDetailedErrors` rows keep a
/// message; the count is always exact.
struct RejectReport {
  static constexpr std::size_t kMaxDetailedErrors = 10000;

  std::vector<RowError> errors;
  std::size_t count = 0;

  void add(std::size_t line, std::string reason);
};

/// Splits a stream into lines through a fixed-size buffer. Trailing CR is
/// stripped so LF and CRLF files read the same.
class LineReader {
 public:
  explicit LineReader(std::istream& in, std::size_t buffer_size = 1 << 20);

  /// The view stays valid until the next call.
  bool next(std::string_view& line);
  std::size_t line_number() const noexcept { return line_no_; }

 private:
  bool refill();

  std::istream& in_;
  std::vector<char> buf_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  bool eof_ = false;
  std::string carry_;
  std::size_t line_no_ = 0;
};

struct AntennaParse {
  std::vector<Antenna> antennas;
  RejectReport rejected;        // malformed rows and out-of-bbox antennas
  std::size_t data_rows = 0;
};

/// Parses `antennas.csv`. Rows outside `bbox` (when given) are reported and
/// excluded. A missing or wrong header throws ValidationError; a repeated
/// antenna id is rejected at the later row.
AntennaParse parse_antennas(std::istream& in,
                            const std::optional<BoundingBox>& bbox = std::nullopt);

/// Streaming reader for `activity.csv`. Memory use does not depend on file
/// length: rejected rows beyond the detail cap are only counted.
class ActivityReader {
 public:
  /// Reads and checks the header; throws ValidationError when it is missing.
  explicit ActivityReader(std::istream& in);

  /// Fills `out` with the next valid record; false at end of stream.
  bool next(ActivityRecord& out);

  const RejectReport& rejected() const noexcept { return rejected_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t data_rows() const noexcept { return data_rows_; }

 private:
  LineReader lines_;
  RejectReport rejected_;
  std::size_t accepted_ = 0;
  std::size_t data_rows_ = 0;
};

/// Parses one data row. Returns the rejection reason on failure.
std::optional<std::string> parse_activity_row(std::string_view line, ActivityRecord& out);

class DuplicateRecordError : public ValidationError {
 public:
  DuplicateRecordError(std::string antenna_id, Timestamp window);

  const std::string& antenna_id() const noexcept { return antenna_id_; }
  Timestamp window() const noexcept { return window_; }

 private:
  std::string antenna_id_;
  Timestamp window_;
};

struct ActivityParse {
  std::vector<ActivityRecord> records;
  RejectReport rejected;
  std::size_t data_rows = 0;
};

/// Reads a whole activity stream into memory and enforces
/// (antenna_id, window_start) uniqueness, throwing DuplicateRecordError.
/// Intended for small inputs; the pipeline streams through ActivityReader.
ActivityParse parse_activity(std::istream& in);

void append_activity_row(std::string& out, const ActivityRecord& record);
std::string format_activity_row(const ActivityRecord& record);
void append_antenna_row(std::string& out, const Antenna& antenna);

}  // namespace citypulse::ingest
