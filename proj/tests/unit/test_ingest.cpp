#include <doctest.h>

#include <random>
#include <sstream>

#include "citypulse/error.hpp"
#include "citypulse/ingest.hpp"
#include "fixtures.hpp"

using namespace citypulse;
using namespace citypulse::ingest;

namespace {

const BoundingBox kLondon{51.28, -0.51, 51.69, 0.33};

AntennaParse antennas_from(const std::string& text, std::optional<BoundingBox> bbox = kLondon) {
  std::istringstream in(text);
  return parse_antennas(in, bbox);
}

ActivityParse activity_from(const std::string& text) {
  std::istringstream in(text);
  return parse_activity(in);
}

}  // namespace

TEST_CASE("antenna rows map to fields") {
  const auto r = antennas_from("antenna_id,lat,lon\nA1,51.5560,-0.2795\n");
  REQUIRE(r.antennas.size() == 1);
  CHECK(r.antennas[0] == Antenna{"A1", 51.5560, -0.2795});
  CHECK(r.rejected.count == 0);
}

TEST_CASE("malformed antenna rows are rejected with line numbers") {
  const auto r = antennas_from(
      "antenna_id,lat,lon\r\nA2,abc,0.0\r\nA3,51.5,-0.1\r\nA4,60.0,0.0\r\nA3,51.6,-0.1\r\nA5,51.5\r\n");
  REQUIRE(r.antennas.size() == 1);
  CHECK(r.antennas[0].antenna_id == "A3");
  CHECK(r.data_rows == 5);
  REQUIRE(r.rejected.count == 4);
  CHECK(r.rejected.errors[0] == RowError{2, "non-numeric coordinate"});
  CHECK(r.rejected.errors[1] == RowError{4, "outside bbox: A4"});
  CHECK(r.rejected.errors[2] == RowError{5, "duplicate antenna_id: A3"});
  CHECK(r.rejected.errors[3] == RowError{6, "expected 3 fields"});
}

TEST_CASE("header-only antenna file is empty, missing header is fatal") {
  const auto r = antennas_from("antenna_id,lat,lon\n");
  CHECK(r.antennas.empty());
  CHECK(r.rejected.count == 0);
  CHECK_THROWS_AS(antennas_from("A1,51.5,-0.1\n"), ValidationError);
  CHECK_THROWS_AS(antennas_from(""), ValidationError);
  CHECK(antennas_from("\xEF\xBB\xBF" "antenna_id,lat,lon\nA1,1,2\n", std::nullopt).antennas.size() == 1);
}

TEST_CASE("activity row maps to a record") {
  const auto r = activity_from(
      "antenna_id,window_start,calls,sms,data_down,data_up,data_requests\n"
      "A1,2013-04-01T00:15:00Z,5,2,1048576,262144,17\n");
  REQUIRE(r.records.size() == 1);
  const auto& rec = r.records[0];
  CHECK(rec.antenna_id == "A1");
  CHECK(rec.window_start == fixtures::ts("2013-04-01T00:15:00Z"));
  CHECK(rec.calls() == 5);
  CHECK(rec.sms() == 2);
  CHECK(rec.data_down() == 1048576);
  CHECK(rec.data_up() == 262144);
  CHECK(rec.data_requests() == 17);
}

TEST_CASE("activity rejections and count conservation") {
  const auto r = activity_from(
      "antenna_id,window_start,calls,sms,data_down,data_up,data_requests\n"
      "A1,2013-04-01T00:07:00Z,1,0,0,0,0\n"
      "A1,2013-04-01T00:00:00Z,-1,0,0,0,0\n"
      "A1,2013-04-01T00:00:00Z,1,x,0,0,0\n"
      "A1,2013-04-01,1,0,0,0,0\n"
      "A1,2013-04-01T00:00:00Z,1,0,0,0\n"
      "A1,2013-04-01T00:00:00Z,1,0,0,0,0\n");
  CHECK(r.records.size() == 1);
  CHECK(r.data_rows == 6);
  CHECK(r.records.size() + r.rejected.count == r.data_rows);
  REQUIRE(r.rejected.errors.size() == 5);
  CHECK(r.rejected.errors[0] == RowError{2, "unaligned window"});
  CHECK(r.rejected.errors[1] == RowError{3, "negative counter"});
  CHECK(r.rejected.errors[2] == RowError{4, "malformed counter"});
  CHECK(r.rejected.errors[3] == RowError{5, "malformed timestamp"});
  CHECK(r.rejected.errors[4] == RowError{6, "expected 7 fields"});
}

TEST_CASE("duplicate activity key is fatal and names the record") {
  try {
    activity_from(
        "antenna_id,window_start,calls,sms,data_down,data_up,data_requests\n"
        "A1,2013-04-01T00:15:00Z,1,0,0,0,0\n"
        "A2,2013-04-01T00:15:00Z,1,0,0,0,0\n"
        "A1,2013-04-01T00:15:00Z,2,0,0,0,0\n");
    FAIL("expected a duplicate error");
  } catch (const DuplicateRecordError& e) {
    CHECK(e.antenna_id() == "A1");
    CHECK(e.window() == fixtures::ts("2013-04-01T00:15:00Z"));
    CHECK(std::string(e.what()).find("A1") != std::string::npos);
    CHECK(std::string(e.what()).find("2013-04-01T00:15:00Z") != std::string::npos);
  }
}

TEST_CASE("activity rows round-trip through csv") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> count(0, std::int64_t{1} << 40);
  std::uniform_int_distribution<int> window(0, 200000);
  for (int i = 0; i < 2000; ++i) {
    ActivityRecord rec;
    rec.antenna_id = "ant-" + std::to_string(rng() % 100000);
    rec.window_start = fixtures::ts("2010-01-01T00:00:00Z") + kWindowLength * window(rng);
    for (auto& v : rec.counts.v) v = count(rng);
    ActivityRecord back;
    REQUIRE_FALSE(parse_activity_row(format_activity_row(rec), back));
    CHECK(back == rec);
  }
}

TEST_CASE("line reader handles lines spanning buffer boundaries") {
  std::string text;
  for (int i = 0; i < 500; ++i) text += std::string(static_cast<std::size_t>(i % 37), 'x') + "\r\n";
  text += "tail";
  std::istringstream in(text);
  LineReader reader(in, 16);
  std::string_view line;
  int n = 0;
  while (reader.next(line)) {
    if (n < 500) {
      REQUIRE(line.size() == static_cast<std::size_t>(n % 37));
    } else {
      CHECK(line == "tail");
    }
    ++n;
  }
  CHECK(n == 501);
  CHECK(reader.line_number() == 501);
}
