#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scum/model.hpp"
#include "scum/scumindex.hpp"
#include "scum/timestamp.hpp"

namespace scum {

/// A frame file named `<camera_id>_<YYYYMMDD-HHMM>.png`.
struct FrameFile {
  std::filesystem::path path;
  std::string camera_id;
  Timestamp timestamp;
};

/// Parses the file name; nullopt if it does not follow the naming scheme.
std::optional<FrameFile> parse_frame_name(const std::filesystem::path& path);

/// File name for a frame of `camera_id` at `ts`.
std::string frame_file_name(std::string_view camera_id, Timestamp ts);

struct FrameScan {
  std::vector<FrameFile> frames;  // ordered by (timestamp, camera_id)
  std::vector<std::string> warnings;
};

/// Lists the PNG frames of a directory. Non-conforming names are reported
/// as warnings and skipped.
FrameScan scan_frame_directory(const std::filesystem::path& dir);

inline constexpr std::string_view kIndexCsvHeader =
    "timestamp,camera_id,ratio_percent,mean_probability,scum_pixels,river_pixels";

/// One CSV line (no newline); ratio with 3 decimals, probability with 6.
std::string format_csv_row(const IndexRecord& record);
/// Row for a frame that could not be processed: numeric fields left empty.
std::string format_gap_row(Timestamp ts, std::string_view camera_id);

/// Reads a background mask PNG (nonzero = background) into a 0/1 raster.
GrayImage load_background_mask(const std::filesystem::path& path);

struct IndexOptions {
  std::filesystem::path output_dir;  // heatmap/mask PNGs; empty = none written
  double emission_threshold_percent = 5.0;
  bool emit_all = false;
  std::size_t threads = 1;
};

/// Outcome for one frame; `record` is empty when the frame failed.
struct FrameOutcome {
  FrameFile frame;
  std::optional<IndexRecord> record;
  bool emitted = false;
  std::string error;
};

struct IndexRun {
  std::vector<FrameOutcome> outcomes;  // in frame order
  std::size_t emitted = 0;
  std::size_t failed = 0;
};

/// Maps a camera id to its profile.
using ProfileLookup = std::function<const CameraProfile&(const std::string& camera_id)>;

/// Runs the index chain over `frames` on a worker pool and writes the CSV
/// (header + one row per frame, in frame order) to `csv`. Heatmap and mask
/// PNGs are written for frames whose ratio exceeds the emission threshold.
/// Failed frames produce a gap row and a message on `log`.
IndexRun run_index(std::span<const FrameFile> frames, const Classifier& classifier,
                   const ProfileLookup& profiles, const IndexOptions& options, std::ostream& csv,
                   std::ostream& log);

}  // namespace scum
