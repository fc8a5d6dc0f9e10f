#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace scdf {

// A calendar month. Ordered lexicographically by (year, month).
class MonthStamp {
 public:
  constexpr MonthStamp() = default;
  MonthStamp(int year, int month);

  int year() const { return year_; }
  int month() const { return month_; }

  MonthStamp next() const;
  MonthStamp prev() const;

  // Months elapsed from `other` to *this (negative if *this is earlier).
  int months_since(const MonthStamp& other) const;

  // "2025-10"
  std::string iso() const;
  // "October 2025"
  std::string display() const;

  // Accepts "YYYY-MM" and "YYYY-MM-DD" (day ignored).
  static MonthStamp parse(std::string_view text);

  friend constexpr auto operator<=>(const MonthStamp&,
                                    const MonthStamp&) = default;

 private:
  int year_ = 1970;
  int month_ = 1;
};

class Date {
 public:
  constexpr Date() = default;
  Date(int year, int month, int day);

  int year() const { return year_; }
  int month() const { return month_; }
  int day() const { return day_; }
  MonthStamp month_stamp() const { return {year_, month_}; }

  std::string iso() const;
  // Strict "YYYY-MM-DD".
  static Date parse(std::string_view text);
  static Date last_day_of(const MonthStamp& m);

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  int year_ = 1970;
  int month_ = 1;
  int day_ = 1;
};

int days_in_month(int year, int month);
std::string_view month_name(int month);

}  // namespace scdf
