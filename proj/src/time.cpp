#include "citypulse/time.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <stdexcept>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

namespace citypulse {

namespace {

using namespace std::chrono;

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) noexcept {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

std::optional<sys_days> make_date(int y, int m, int d) noexcept {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

void put2(char* p, unsigned v) noexcept {
  p[0] = static_cast<char>('0' + v / 10);
  p[1] = static_cast<char>('0' + v % 10);
}

}  // namespace

std::optional<sys_days> parse_date(std::string_view s) noexcept {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_digits(s, 0, 4, y) || !read_digits(s, 5, 2, m) || !read_digits(s, 8, 2, d)) {
    return std::nullopt;
  }
  return make_date(y, m, d);
}

std::string format_date(sys_days d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Timestamp> parse_utc_timestamp(std::string_view s) noexcept {
  // YYYY-MM-DDTHH:MM:SS then Z or +00:00
  if (s.size() < 20 || s[10] != 'T' || s[13] != ':' || s[16] != ':') return std::nullopt;
  const auto suffix = s.substr(19);
  if (suffix != "Z" && suffix != "+00:00") return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_digits(s, 11, 2, hh) || !read_digits(s, 14, 2, mm) || !read_digits(s, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss};
}

void append_utc_timestamp(std::string& out, Timestamp t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto secs = (t - day_point).count();
  char buf[20];
  const int y = static_cast<int>(ymd.year());
  buf[0] = static_cast<char>('0' + (y / 1000) % 10);
  buf[1] = static_cast<char>('0' + (y / 100) % 10);
  buf[2] = static_cast<char>('0' + (y / 10) % 10);
  buf[3] = static_cast<char>('0' + y % 10);
  buf[4] = '-';
  put2(buf + 5, static_cast<unsigned>(ymd.month()));
  buf[7] = '-';
  put2(buf + 8, static_cast<unsigned>(ymd.day()));
  buf[10] = 'T';
  put2(buf + 11, static_cast<unsigned>(secs / 3600));
  buf[13] = ':';
  put2(buf + 14, static_cast<unsigned>((secs / 60) % 60));
  buf[16] = ':';
  put2(buf + 17, static_cast<unsigned>(secs % 60));
  buf[19] = 'Z';
  out.append(buf, 20);
}

std::string format_utc_timestamp(Timestamp t) {
  std::string out;
  out.reserve(20);
  append_utc_timestamp(out, t);
  return out;
}

WindowAxis::WindowAxis(sys_days period_start, sys_days period_end)
    : start_(Timestamp{period_start}) {
  if (period_end <= period_start) throw std::invalid_argument("empty period");
  size_ = static_cast<std::size_t>((Timestamp{period_end} - start_) / kWindowLength);
}

std::optional<std::size_t> WindowAxis::index_of(Timestamp t) const noexcept {
  if (t < start_) return std::nullopt;
  const auto delta = (t - start_).count();
  if (delta % kWindowLength.count() != 0) return std::nullopt;
  const auto idx = static_cast<std::size_t>(delta / kWindowLength.count());
  if (idx >= size_) return std::nullopt;
  return idx;
}

std::size_t WindowAxis::lower_index(Timestamp t) const noexcept {
  if (t <= start_) return 0;
  const auto delta = (t - start_).count();
  const auto idx = static_cast<std::size_t>((delta + kWindowLength.count() - 1) /
                                            kWindowLength.count());
  return std::min(idx, size_);
}

WindowCalendar::WindowCalendar(const WindowAxis& axis, const std::string& timezone)
    : axis_(axis), timezone_(timezone) {
  absl::TimeZone tz;
  if (!absl::LoadTimeZone(timezone, &tz)) {
    throw std::invalid_argument("unknown time zone '" + timezone + "'");
  }
  const std::size_t n = axis.size();
  wall_bin_.resize(n);
  anomalous_.resize(n);
  minute_.resize(n);
  day_.resize(n);
  week_.resize(n);
  bins_ = std::make_shared<std::vector<std::int16_t>>(n);

  absl::CivilDay first_day;
  absl::CivilDay first_monday;
  for (std::size_t w = 0; w < n; ++w) {
    const auto unix = axis.at(w).time_since_epoch().count();
    const auto info = tz.At(absl::FromUnixSeconds(unix));
    const absl::CivilSecond cs = info.cs;
    const absl::CivilDay day(cs);
    const int weekday = (static_cast<int>(absl::GetWeekday(day)) + 7 -
                         static_cast<int>(absl::Weekday::monday)) % 7;
    const absl::CivilDay monday = day - weekday;
    if (w == 0) {
      first_day = day;
      first_monday = monday;
    }
    const int minute_of_day = cs.hour() * 60 + cs.minute();
    const int slot = minute_of_day / 15;
    wall_bin_[w] = static_cast<std::uint16_t>(weekday * static_cast<int>(kSlotsPerDay) + slot);
    minute_[w] = static_cast<std::uint16_t>(minute_of_day);
    // A wall-clock time that maps to two instants belongs to a fall-back
    // repeat; both occurrences are kept out of the profile bins.
    anomalous_[w] = tz.At(cs).kind == absl::TimeZone::TimeInfo::REPEATED ? 1 : 0;
    day_[w] = static_cast<std::uint32_t>(day - first_day);
    const auto week = static_cast<std::uint32_t>((monday - first_monday) / 7);
    week_[w] = week;
    (*bins_)[w] = anomalous_[w] ? std::int16_t{-1} : static_cast<std::int16_t>(wall_bin_[w]);
    if (week >= week_ids_.size()) {
      const absl::CivilDay thursday = monday + 3;
      const auto iso_year = thursday.year();
      const auto week_no = (thursday - absl::CivilDay(iso_year, 1, 1)) / 7 + 1;
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-W%02d", static_cast<int>(iso_year),
                    static_cast<int>(week_no));
      week_ids_.resize(week + 1);
      week_windows_.resize(week + 1, 0);
      week_full_.resize(week + 1, 0);
      week_ids_[week] = buf;
    }
    ++week_windows_[week];
  }
  num_days_ = n == 0 ? 0 : day_[n - 1] + 1;

  // A week is full when the axis covers its whole local span: the first
  // window starts Monday 00:00 and the window after the last one is the
  // following Monday 00:00.
  for (std::size_t week = 0; week < week_ids_.size(); ++week) {
    const auto first = std::lower_bound(week_.begin(), week_.end(), week) - week_.begin();
    const auto last = std::upper_bound(week_.begin(), week_.end(), week) - week_.begin();
    if (first == last) continue;
    const bool starts_monday = wall_bin_[first] == 0 && !(first > 0 && week_[first - 1] == week);
    bool ends_sunday = false;
    if (static_cast<std::size_t>(last) < n) {
      ends_sunday = true;  // next window already belongs to the next week
    } else {
      const auto after = axis.at(static_cast<std::size_t>(last)).time_since_epoch().count();
      const auto info = tz.At(absl::FromUnixSeconds(after));
      const absl::CivilDay d(info.cs);
      ends_sunday = absl::GetWeekday(d) == absl::Weekday::monday && info.cs.hour() == 0 &&
                    info.cs.minute() == 0;
    }
    week_full_[week] = (starts_monday && ends_sunday) ? 1 : 0;
  }
}

std::optional<std::size_t> WindowCalendar::find_week(std::string_view iso_week_id) const {
  for (std::size_t i = 0; i < week_ids_.size(); ++i) {
    if (week_ids_[i] == iso_week_id) return i;
  }
  return std::nullopt;
}

std::size_t WindowCalendar::full_week_count() const {
  return static_cast<std::size_t>(std::count(week_full_.begin(), week_full_.end(), 1));
}

}  // namespace citypulse
