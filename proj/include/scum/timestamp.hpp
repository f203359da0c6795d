#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scum {

/// UTC instant with minute precision.
class Timestamp {
 public:
  constexpr Timestamp() = default;

  /// Throws InvalidParam for an invalid calendar date or time of day.
  static Timestamp from_utc(int year, unsigned month, unsigned day, unsigned hour, unsigned minute);
  static constexpr Timestamp from_minutes(std::int64_t minutes) { return Timestamp(minutes); }

  /// Parses "YYYYMMDD-HHMM". Returns nullopt on any malformed input.
  static std::optional<Timestamp> parse_compact(std::string_view text);

  std::int64_t minutes_since_epoch() const noexcept { return minutes_; }
  Timestamp plus_minutes(std::int64_t minutes) const noexcept { return Timestamp(minutes_ + minutes); }

  /// "YYYYMMDD-HHMM", the frame filename form.
  std::string compact() const;
  /// "YYYY-MM-DDTHH:MMZ".
  std::string iso() const;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;

 private:
  constexpr explicit Timestamp(std::int64_t minutes) : minutes_(minutes) {}
  std::int64_t minutes_ = 0;
};

}  // namespace scum
