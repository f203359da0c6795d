#include "scum/timestamp.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

#include "scum/errors.hpp"

namespace scum {

namespace {

using namespace std::chrono;

struct Fields {
  int year;
  unsigned month, day, hour, minute;
};

Fields split(std::int64_t minutes) {
  const auto total = std::chrono::minutes(minutes);
  const auto day_point = floor<days>(sys_time<std::chrono::minutes>(total));
  const year_month_day ymd(day_point);
  const auto in_day = (sys_time<std::chrono::minutes>(total) - day_point).count();
  return Fields{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<unsigned>(in_day / 60),
                static_cast<unsigned>(in_day % 60)};
}

}  // namespace

Timestamp Timestamp::from_utc(int year, unsigned month, unsigned day, unsigned hour,
                              unsigned minute) {
  const year_month_day ymd{std::chrono::year(year), std::chrono::month(month),
                           std::chrono::day(day)};
  if (!ymd.ok() || hour > 23 || minute > 59) throw InvalidParam("invalid UTC date/time");
  const auto t = sys_days(ymd) + hours(hour) + std::chrono::minutes(minute);
  return Timestamp(duration_cast<std::chrono::minutes>(t.time_since_epoch()).count());
}

std::optional<Timestamp> Timestamp::parse_compact(std::string_view text) {
  if (text.size() != 13 || text[8] != '-') return std::nullopt;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i != 8 && !std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    unsigned v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + static_cast<unsigned>(text[i] - '0');
    return v;
  };
  try {
    return from_utc(static_cast<int>(num(0, 4)), num(4, 2), num(6, 2), num(9, 2), num(11, 2));
  } catch (const InvalidParam&) {
    return std::nullopt;
  }
}

std::string Timestamp::compact() const {
  const Fields f = split(minutes_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u-%02u%02u", f.year, f.month, f.day, f.hour, f.minute);
  return buf;
}

std::string Timestamp::iso() const {
  const Fields f = split(minutes_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02uZ", f.year, f.month, f.day, f.hour,
                f.minute);
  return buf;
}

}  // namespace scum
