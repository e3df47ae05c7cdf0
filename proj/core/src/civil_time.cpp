#include "parkzone/civil_time.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "parkzone/error.hpp"

namespace parkzone {
namespace {

constexpr std::array<std::string_view, 8> kWeekdayNames{"", "Mon", "Tue", "Wed", "Thu",
                                                        "Fri", "Sat", "Sun"};

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    fail(ErrorKind::parse, fmt::format("malformed timestamp '{}'", whole));
  }
  return value;
}

Date make_date(int y, int m, int d, std::string_view whole) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) fail(ErrorKind::parse, fmt::format("invalid calendar date '{}'", whole));
  return Date{ymd};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    fail(ErrorKind::parse, fmt::format("expected YYYY-MM-DD, got '{}'", text));
  }
  return make_date(parse_fixed(text, 0, 4, text), parse_fixed(text, 5, 2, text),
                   parse_fixed(text, 8, 2, text), text);
}

MinuteStamp parse_minute_stamp(std::string_view text) {
  if (text.size() != 16 || text[10] != 'T' || text[13] != ':') {
    fail(ErrorKind::parse, fmt::format("expected YYYY-MM-DDTHH:MM, got '{}'", text));
  }
  Date d = parse_date(text.substr(0, 10));
  int hh = parse_fixed(text, 11, 2, text);
  int mm = parse_fixed(text, 14, 2, text);
  if (hh > 23 || mm > 59) fail(ErrorKind::parse, fmt::format("invalid clock time '{}'", text));
  return start_of(d) + hh * 60 + mm;
}

std::string format_date(Date date) {
  std::chrono::year_month_day ymd{date};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

unsigned iso_weekday(Date date) { return std::chrono::weekday{date}.iso_encoding(); }

std::string_view weekday_name(unsigned iso) {
  if (iso < 1 || iso > 7) fail(ErrorKind::invalid_input, fmt::format("bad weekday {}", iso));
  return kWeekdayNames[iso];
}

unsigned parse_weekday(std::string_view name) {
  name = trim(name);
  for (unsigned i = 1; i <= 7; ++i) {
    if (kWeekdayNames[i] == name) return i;
  }
  fail(ErrorKind::parse, fmt::format("unknown weekday '{}'", name));
}

std::string format_hour_stamp(const HourStamp& stamp) {
  return fmt::format("{}T{:02d}:00", format_date(stamp.date), stamp.hour);
}

HourStamp parse_hour_stamp(std::string_view text) {
  MinuteStamp m = parse_minute_stamp(text);
  if (m % 60 != 0) fail(ErrorKind::parse, fmt::format("timestamp '{}' is not on the hour", text));
  Date d = date_of(m);
  return {d, static_cast<int>((m - start_of(d)) / 60)};
}

std::string slice_name(const SliceKey& key) {
  return fmt::format("{}_{:02d}", weekday_name(key.weekday), key.hour);
}

std::vector<unsigned> PaidSchedule::paid_weekdays() const {
  std::vector<unsigned> out;
  for (unsigned i = 1; i <= 7; ++i) {
    if (paid_day[i]) out.push_back(i);
  }
  return out;
}

void PaidSchedule::validate() const {
  if (start_hour < 0 || end_hour > 24 || start_hour >= end_hour) {
    fail(ErrorKind::invalid_config,
         fmt::format("paid hours [{}, {}) are not a valid window", start_hour, end_hour));
  }
  if (paid_weekdays().empty()) fail(ErrorKind::invalid_config, "no paid days configured");
  if (first_date && last_date && *first_date > *last_date) {
    fail(ErrorKind::invalid_config, "first_date is after last_date");
  }
}

PaidSchedule PaidSchedule::parse(std::istream& in) {
  PaidSchedule s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::parse, fmt::format("schedule line {}: expected key = value", lineno));
    }
    auto key = trim(v.substr(0, eq));
    auto value = trim(v.substr(eq + 1));
    auto as_int = [&](std::string_view x) {
      int out = 0;
      auto [ptr, ec] = std::from_chars(x.data(), x.data() + x.size(), out);
      if (ec != std::errc{} || ptr != x.data() + x.size()) {
        fail(ErrorKind::parse, fmt::format("schedule line {}: '{}' is not an integer", lineno, x));
      }
      return out;
    };
    if (key == "days") {
      s.paid_day.fill(false);
      std::size_t pos = 0;
      while (pos <= value.size()) {
        auto comma = value.find(',', pos);
        auto item = value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        s.paid_day[parse_weekday(item)] = true;
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
    } else if (key == "start_hour") {
      s.start_hour = as_int(value);
    } else if (key == "end_hour") {
      s.end_hour = as_int(value);
    } else if (key == "first_date") {
      s.first_date = parse_date(value);
    } else if (key == "last_date") {
      s.last_date = parse_date(value);
    } else {
      fail(ErrorKind::parse, fmt::format("schedule line {}: unknown key '{}'", lineno, key));
    }
  }
  s.validate();
  return s;
}

PaidSchedule PaidSchedule::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open schedule '{}'", path));
  return parse(in);
}

std::string PaidSchedule::to_text() const {
  std::string days;
  for (auto d : paid_weekdays()) {
    if (!days.empty()) days += ',';
    days += weekday_name(d);
  }
  std::string out = fmt::format("days = {}\nstart_hour = {}\nend_hour = {}\n", days, start_hour, end_hour);
  if (first_date) out += fmt::format("first_date = {}\n", format_date(*first_date));
  if (last_date) out += fmt::format("last_date = {}\n", format_date(*last_date));
  return out;
}

}  // namespace parkzone
