#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parkzone {

/// Local calendar date. No time zone is attached; all timestamps in the
/// input tables are local clock time.
using Date = std::chrono::sys_days;

/// Minutes since 1970-01-01T00:00 local time.
using MinuteStamp = std::int64_t;

inline constexpr int kMinutesPerDay = 24 * 60;

Date parse_date(std::string_view text);             // YYYY-MM-DD
MinuteStamp parse_minute_stamp(std::string_view text);  // YYYY-MM-DDTHH:MM
std::string format_date(Date date);

inline Date date_of(MinuteStamp m) {
  auto days = m >= 0 ? m / kMinutesPerDay : -((-m + kMinutesPerDay - 1) / kMinutesPerDay);
  return Date{std::chrono::days{days}};
}
inline MinuteStamp start_of(Date date) {
  return static_cast<MinuteStamp>(date.time_since_epoch().count()) * kMinutesPerDay;
}

/// ISO weekday, Mon = 1 ... Sun = 7.
unsigned iso_weekday(Date date);
std::string_view weekday_name(unsigned iso);  // "Mon" ...
unsigned parse_weekday(std::string_view name);

/// One paid hour: the hour [hour:00, hour+1:00) on `date`.
struct HourStamp {
  Date date;
  int hour = 0;

  auto operator<=>(const HourStamp&) const = default;
};

std::string format_hour_stamp(const HourStamp& stamp);  // YYYY-MM-DDTHH:00
HourStamp parse_hour_stamp(std::string_view text);

/// Inclusive date range.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return first <= d && d <= last; }
};

/// A (day-of-week, hour) combination. Everything aggregated "per slice"
/// is keyed by this.
struct SliceKey {
  unsigned weekday = 1;  // ISO
  int hour = 0;

  auto operator<=>(const SliceKey&) const = default;
};

std::string slice_name(const SliceKey& key);  // e.g. "Mon_08"

/// Paid days and hours. Defaults to Mon-Sat, 8AM-8PM.
struct PaidSchedule {
  std::array<bool, 8> paid_day{false, true, true, true, true, true, true, false};  // ISO index
  int start_hour = 8;
  int end_hour = 20;
  std::optional<Date> first_date;
  std::optional<Date> last_date;

  bool is_paid_day(Date d) const { return paid_day[iso_weekday(d)]; }
  int window_minutes() const { return (end_hour - start_hour) * 60; }
  int hours_per_day() const { return end_hour - start_hour; }
  std::vector<unsigned> paid_weekdays() const;

  void validate() const;

  /// Key-value text: `days = Mon,Tue`, `start_hour = 8`, `end_hour = 20`,
  /// optional `first_date`/`last_date`. `#` starts a comment.
  static PaidSchedule parse(std::istream& in);
  static PaidSchedule load(const std::string& path);
  std::string to_text() const;
};

}  // namespace parkzone
