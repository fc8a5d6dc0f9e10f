#include "scdf/calendar.hpp"

#include <array>
#include <charconv>

#include <fmt/format.h>

#include "scdf/errors.hpp"

namespace scdf {

namespace {

constexpr std::array<std::string_view, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

int parse_fixed_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InputError(fmt::format("invalid date component in '{}'", whole));
  }
  return value;
}

bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

}  // namespace

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap(year)) return 29;
  return kDays.at(static_cast<size_t>(month - 1));
}

std::string_view month_name(int month) {
  return kMonthNames.at(static_cast<size_t>(month - 1));
}

MonthStamp::MonthStamp(int year, int month) : year_(year), month_(month) {
  if (month < 1 || month > 12) {
    throw InputError(fmt::format("month out of range: {}", month));
  }
}

MonthStamp MonthStamp::next() const {
  return month_ == 12 ? MonthStamp(year_ + 1, 1) : MonthStamp(year_, month_ + 1);
}

MonthStamp MonthStamp::prev() const {
  return month_ == 1 ? MonthStamp(year_ - 1, 12) : MonthStamp(year_, month_ - 1);
}

int MonthStamp::months_since(const MonthStamp& other) const {
  return (year_ - other.year_) * 12 + (month_ - other.month_);
}

std::string MonthStamp::iso() const {
  return fmt::format("{:04d}-{:02d}", year_, month_);
}

std::string MonthStamp::display() const {
  return fmt::format("{} {}", month_name(month_), year_);
}

MonthStamp MonthStamp::parse(std::string_view text) {
  if ((text.size() != 7 && text.size() != 10) || text[4] != '-') {
    throw InputError(fmt::format("expected YYYY-MM, got '{}'", text));
  }
  if (text.size() == 10) return Date::parse(text).month_stamp();
  return {parse_fixed_int(text.substr(0, 4), text),
          parse_fixed_int(text.substr(5, 2), text)};
}

Date::Date(int year, int month, int day) : year_(year), month_(month), day_(day) {
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
    throw InputError(
        fmt::format("invalid calendar date {:04d}-{:02d}-{:02d}", year, month, day));
  }
}

std::string Date::iso() const {
  return fmt::format("{:04d}-{:02d}-{:02d}", year_, month_, day_);
}

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw InputError(fmt::format("expected YYYY-MM-DD, got '{}'", text));
  }
  return {parse_fixed_int(text.substr(0, 4), text),
          parse_fixed_int(text.substr(5, 2), text),
          parse_fixed_int(text.substr(8, 2), text)};
}

Date Date::last_day_of(const MonthStamp& m) {
  return {m.year(), m.month(), days_in_month(m.year(), m.month())};
}

}  // namespace scdf
