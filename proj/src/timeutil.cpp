#include "pvtraj/timeutil.hpp"

#include "pvtraj/core.hpp"

#include <charconv>
#include <cstdio>

namespace pvtraj {
namespace {

int take_int(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) throw InputError("truncated timestamp '" + std::string(text) + "'");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len)
    throw InputError("malformed timestamp '" + std::string(text) + "'");
  return value;
}

}  // namespace

HourStamp parse_hour_stamp(std::string_view text) {
  while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-')
    throw InputError("malformed timestamp '" + std::string(text) + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{take_int(text, 0, 4)},
                                        std::chrono::month{static_cast<unsigned>(take_int(text, 5, 2))},
                                        std::chrono::day{static_cast<unsigned>(take_int(text, 8, 2))}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
  int hour = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') throw InputError("malformed timestamp '" + std::string(text) + "'");
    hour = take_int(text, 11, 2);
    for (std::size_t pos = 13; pos < text.size(); pos += 3) {
      if (text[pos] != ':' || take_int(text, pos + 1, 2) != 0)
        throw InputError("timestamp '" + std::string(text) + "' is not on the hour");
    }
    if (hour > 23) throw InputError("invalid hour in '" + std::string(text) + "'");
  }
  return HourStamp(Date(ymd)) + std::chrono::hours(hour);
}

Date parse_date(std::string_view text) {
  const HourStamp t = parse_hour_stamp(text);
  if (hour_of_day(t) != 0) throw InputError("expected a date, got '" + std::string(text) + "'");
  return date_of(t);
}

std::string format_hour_stamp(HourStamp t) {
  const std::chrono::year_month_day ymd{date_of(t)};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(t));
  return buf;
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace pvtraj
