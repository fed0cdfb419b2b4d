#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace pharmatimeline {

// Calendar day, stored as days since 1970-01-01. Day resolution is all the
// pipeline ever needs; document and prescription dates come in as ISO dates.
class Date {
 public:
  Date() = default;

  static Date from_ymd(int year, unsigned month, unsigned day);
  static Date from_days(int days) { return Date(days); }

  // Parses strict "YYYY-MM-DD"; throws std::invalid_argument otherwise.
  static Date parse(std::string_view iso);
  static std::optional<Date> try_parse(std::string_view iso);

  std::string to_string() const;  // "YYYY-MM-DD"

  int year() const;
  unsigned month() const;
  unsigned day() const;

  int days_since_epoch() const { return days_; }

  Date add_days(int n) const { return Date(days_ + n); }
  friend Date operator+(Date d, int n) { return d.add_days(n); }
  friend Date operator-(Date d, int n) { return d.add_days(-n); }
  friend int operator-(Date a, Date b) { return a.days_ - b.days_; }

  auto operator<=>(const Date&) const = default;

 private:
  explicit Date(int days) : days_(days) {}
  int days_ = 0;
};

// Completed years from dob to at: the usual birthday arithmetic.
// Precondition: dob <= at (throws std::invalid_argument otherwise).
int completed_years(Date dob, Date at);

}  // namespace pharmatimeline
