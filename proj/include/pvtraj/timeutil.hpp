#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace pvtraj {

using Date = std::chrono::sys_days;
using HourStamp = std::chrono::sys_time<std::chrono::hours>;

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH[:MM[:SS]][Z]" or the same with a space
/// separator. Minutes and seconds must be zero. Throws InputError.
HourStamp parse_hour_stamp(std::string_view text);
Date parse_date(std::string_view text);

/// "YYYY-MM-DDTHH:00:00Z"
std::string format_hour_stamp(HourStamp t);
/// "YYYY-MM-DD"
std::string format_date(Date d);

inline HourStamp issue_time(Date d) { return HourStamp(d); }
inline Date date_of(HourStamp t) { return std::chrono::floor<std::chrono::days>(t); }
inline int hour_of_day(HourStamp t) {
  return static_cast<int>((t - HourStamp(date_of(t))).count());
}
inline int day_of_year(Date d) {
  const std::chrono::year_month_day ymd{d};
  return static_cast<int>((d - Date(ymd.year() / std::chrono::January / 1)).count());
}

}  // namespace pvtraj
