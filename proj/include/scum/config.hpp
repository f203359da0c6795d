#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scum/errors.hpp"

namespace scum {

/// Bad configuration: unknown key, malformed value, missing input path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat `key = value` configuration with '#' comments.
///
/// Keys are checked against a fixed vocabulary. Per-camera keys take the form
/// `camera.<id>.<key>` where <key> is one of the camera keys.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, std::string_view source = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  static bool is_known_key(std::string_view key);
  static const std::vector<std::string_view>& known_keys();
  static const std::vector<std::string_view>& camera_keys();

  /// Sets or overrides a key. Throws ConfigError for unknown keys.
  void set(std::string_view key, std::string value);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  /// Throws ConfigError naming the key if it is missing.
  std::string require(std::string_view key) const;

  /// Camera ids that have at least one `camera.<id>.*` key.
  std::vector<std::string> camera_ids() const;

  /// `camera.<id>.<key>` if that key is set, else `<key>`.
  std::string camera_key(std::string_view camera_id, std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept {
    return values_;
  }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace scum
