#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace reclab {

// Calendar date with day-level arithmetic (proleptic Gregorian).
struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  // Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
  long serial() const {
    int y = year;
    const int m = month;
    const int d = day;
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
  }

  static Date from_serial(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                static_cast<int>(d)};
  }

  Date plus_days(long n) const { return from_serial(serial() + n); }

  bool valid() const {
    if (month < 1 || month > 12 || day < 1) return false;
    static const int md[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = md[month - 1];
    if (month == 2) {
      bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
      if (leap) dim = 29;
    }
    return day <= dim;
  }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  friend bool operator==(const Date& a, const Date& b) {
    return a.year == b.year && a.month == b.month && a.day == b.day;
  }
  friend bool operator<(const Date& a, const Date& b) {
    return a.serial() < b.serial();
  }
  friend bool operator<=(const Date& a, const Date& b) {
    return a.serial() <= b.serial();
  }
  friend long operator-(const Date& a, const Date& b) {
    return a.serial() - b.serial();
  }
};

// Parses strict ISO-8601 calendar dates (YYYY-MM-DD).
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  Date d;
  auto num = [&](std::string_view part, int& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && p == part.data() + part.size();
  };
  if (!num(s.substr(0, 4), d.year) || !num(s.substr(5, 2), d.month) ||
      !num(s.substr(8, 2), d.day))
    return std::nullopt;
  if (!d.valid()) return std::nullopt;
  return d;
}

}  // namespace reclab
