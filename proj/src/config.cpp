#include "scum/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace scum {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits camera.<id>.<key>; returns false for other keys.
bool split_camera_key(std::string_view key, std::string_view& id, std::string_view& sub) {
  constexpr std::string_view prefix = "camera.";
  if (key.substr(0, prefix.size()) != prefix) return false;
  const auto rest = key.substr(prefix.size());
  const auto dot = rest.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return false;
  id = rest.substr(0, dot);
  sub = rest.substr(dot + 1);
  return true;
}

}  // namespace

const std::vector<std::string_view>& RunConfig::known_keys() {
  static const std::vector<std::string_view> keys{
      // shared
      "seed", "threads", "output_dir",
      // datasets
      "manifest", "n_per_class", "train_fraction", "noise_sigma",
      // training
      "model", "epochs", "batch_size", "learning_rate", "augment_policy", "mixup_alpha",
      "cutout_drop_rate", "cutout_fill", "sweep", "report",
      // evaluation
      "split",
      // indexing
      "frames_dir", "csv", "emission_threshold", "emit_all", "binarize_threshold",
      "probability_floor", "class_mode", "background_mask", "crop_top",
      // synthetic sequences
      "camera_id", "start", "frames", "cadence_minutes", "peak_index", "peak_cells",
      // augment preview
      "n", "policy"};
  return keys;
}

const std::vector<std::string_view>& RunConfig::camera_keys() {
  static const std::vector<std::string_view> keys{"background_mask", "binarize_threshold",
                                                  "probability_floor", "class_mode", "crop_top"};
  return keys;
}

bool RunConfig::is_known_key(std::string_view key) {
  std::string_view id, sub;
  if (split_camera_key(key, id, sub)) {
    const auto& ck = camera_keys();
    return std::find(ck.begin(), ck.end(), sub) != ck.end();
  }
  const auto& k = known_keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

RunConfig RunConfig::parse(std::string_view text, std::string_view source) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!is_known_key(key)) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void RunConfig::set(std::string_view key, std::string value) {
  if (!is_known_key(key)) throw ConfigError("unknown key '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

bool RunConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> RunConfig::get(std::string_view key) const {
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

std::string RunConfig::get_string(std::string_view key, std::string fallback) const {
  return get(key).value_or(std::move(fallback));
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + std::string(key) + "' expects a number, got '" + *v + "'");
}

std::int64_t RunConfig::get_int(std::string_view key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError("key '" + std::string(key) + "' expects an integer, got '" + *v + "'");
  }
  return out;
}

std::uint64_t RunConfig::get_uint(std::string_view key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError("key '" + std::string(key) + "' expects a non-negative integer, got '" + *v +
                      "'");
  }
  return out;
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("key '" + std::string(key) + "' expects a boolean, got '" + *v + "'");
}

std::string RunConfig::require(std::string_view key) const {
  const auto v = get(key);
  if (!v || v->empty()) throw ConfigError("missing required key '" + std::string(key) + "'");
  return *v;
}

std::vector<std::string> RunConfig::camera_ids() const {
  std::set<std::string> ids;
  for (const auto& [key, value] : values_) {
    std::string_view id, sub;
    if (split_camera_key(key, id, sub)) ids.emplace(id);
  }
  return {ids.begin(), ids.end()};
}

std::string RunConfig::camera_key(std::string_view camera_id, std::string_view key) const {
  std::string scoped = "camera." + std::string(camera_id) + "." + std::string(key);
  if (has(scoped)) return scoped;
  return std::string(key);
}

}  // namespace scum
