#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace reacts {

// A Gregorian calendar day.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}

  // Returns nullopt when the triple is not a real calendar date.
  static std::optional<Date> from_ymd(int year, unsigned month, unsigned day);

  // Strict YYYY-MM-DD. Anything else (missing day, extra characters,
  // 2021-02-30) yields nullopt.
  static std::optional<Date> parse_iso(std::string_view text);

  std::string iso() const;

  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::chrono::weekday weekday() const { return std::chrono::weekday{days_}; }
  std::chrono::sys_days sys_days() const { return days_; }

  Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }

  // other - *this, in days.
  int days_until(const Date &other) const {
    return static_cast<int>((other.days_ - days_).count());
  }

  friend auto operator<=>(const Date &, const Date &) = default;
  friend bool operator==(const Date &, const Date &) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace reacts
