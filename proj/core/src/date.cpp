#include "pharmatimeline/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace pharmatimeline {

namespace {

using days = std::chrono::days;
using sys_days = std::chrono::sys_days;

std::chrono::year_month_day to_ymd(int days_since_epoch) {
  return std::chrono::year_month_day(sys_days(days(days_since_epoch)));
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year(year),
                                  std::chrono::month(month),
                                  std::chrono::day(day)};
  if (!ymd.ok()) {
    throw std::invalid_argument("invalid calendar date " + std::to_string(year) +
                                "-" + std::to_string(month) + "-" +
                                std::to_string(day));
  }
  return Date(static_cast<int>(sys_days(ymd).time_since_epoch().count()));
}

Date Date::parse(std::string_view iso) {
  auto parsed = try_parse(iso);
  if (!parsed) {
    throw std::invalid_argument("expected YYYY-MM-DD date, got '" +
                                std::string(iso) + "'");
  }
  return *parsed;
}

std::optional<Date> Date::try_parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto to_int = [](std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  int y = 0, m = 0, d = 0;
  if (!to_int(iso.substr(0, 4), y) || !to_int(iso.substr(5, 2), m) ||
      !to_int(iso.substr(8, 2), d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(unsigned(m)),
                                  std::chrono::day(unsigned(d))};
  if (!ymd.ok()) return std::nullopt;
  return Date(static_cast<int>(sys_days(ymd).time_since_epoch().count()));
}

std::string Date::to_string() const {
  auto ymd = to_ymd(days_);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

int Date::year() const { return int(to_ymd(days_).year()); }
unsigned Date::month() const { return unsigned(to_ymd(days_).month()); }
unsigned Date::day() const { return unsigned(to_ymd(days_).day()); }

int completed_years(Date dob, Date at) {
  if (dob > at) {
    throw std::invalid_argument("completed_years: dob " + dob.to_string() +
                                " is after " + at.to_string());
  }
  int years = at.year() - dob.year();
  if (at.month() < dob.month() ||
      (at.month() == dob.month() && at.day() < dob.day())) {
    --years;
  }
  return years;
}

}  // namespace pharmatimeline
