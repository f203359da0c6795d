#include "scum/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "scum/errors.hpp"
#include "scum/png_io.hpp"

namespace scum {

std::optional<FrameFile> parse_frame_name(const std::filesystem::path& path) {
  if (path.extension() != ".png") return std::nullopt;
  const std::string stem = path.stem().string();
  // <camera_id>_<YYYYMMDD-HHMM>; the camera id may itself contain '_'.
  const auto sep = stem.rfind('_');
  if (sep == std::string::npos || sep == 0) return std::nullopt;
  const auto ts = Timestamp::parse_compact(std::string_view(stem).substr(sep + 1));
  if (!ts) return std::nullopt;
  return FrameFile{path, stem.substr(0, sep), *ts};
}

std::string frame_file_name(std::string_view camera_id, Timestamp ts) {
  return std::string(camera_id) + "_" + ts.compact() + ".png";
}

FrameScan scan_frame_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  FrameScan scan;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    if (auto f = parse_frame_name(entry.path())) {
      scan.frames.push_back(std::move(*f));
    } else {
      scan.warnings.push_back("skipping " + entry.path().filename().string() +
                              ": name is not <camera>_<YYYYMMDD-HHMM>.png");
    }
  }
  std::sort(scan.frames.begin(), scan.frames.end(), [](const FrameFile& a, const FrameFile& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.camera_id < b.camera_id;
  });
  return scan;
}

std::string format_csv_row(const IndexRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%.3f,%.6f,%llu,%llu", r.ratio_percent, r.mean_probability,
                static_cast<unsigned long long>(r.scum_pixels),
                static_cast<unsigned long long>(r.river_pixels));
  return r.timestamp.iso() + "," + r.camera_id + buf;
}

std::string format_gap_row(Timestamp ts, std::string_view camera_id) {
  return ts.iso() + "," + std::string(camera_id) + ",,,,";
}

GrayImage load_background_mask(const std::filesystem::path& path) {
  GrayImage mask = png::read_gray(path);
  for (auto& v : mask.data()) v = v != 0 ? 1 : 0;
  return mask;
}

namespace {

GrayImage scale_mask_for_png(const GrayImage& mask) {
  GrayImage out = mask;
  for (auto& v : out.data()) v = v != 0 ? 255 : 0;
  return out;
}

FrameOutcome process_frame(const FrameFile& frame, const Classifier& classifier,
                           const ProfileLookup& profiles, const IndexOptions& options) {
  FrameOutcome out{frame, std::nullopt, false, {}};
  try {
    const CameraProfile& profile = profiles(frame.camera_id);
    const ImageBuffer image = png::read_rgb(frame.path);
    const FrameAnalysis a = analyze_frame(image, classifier, profile);
    out.record = IndexRecord{frame.timestamp,       frame.camera_id,         a.ratio.ratio_percent,
                             a.mean_probability(), a.ratio.scum_pixels, a.ratio.river_pixels};
    const bool emit = options.emit_all || a.ratio.ratio_percent > options.emission_threshold_percent;
    if (emit && !options.output_dir.empty()) {
      const std::string stem = frame.camera_id + "_" + frame.timestamp.compact();
      png::write_gray(options.output_dir / (stem + "_heatmap.png"), a.heatmap);
      png::write_gray(options.output_dir / (stem + "_mask.png"), scale_mask_for_png(a.mask));
      out.emitted = true;
    }
  } catch (const std::exception& e) {
    out.record.reset();
    out.error = e.what();
  }
  return out;
}

}  // namespace

IndexRun run_index(std::span<const FrameFile> frames, const Classifier& classifier,
                   const ProfileLookup& profiles, const IndexOptions& options, std::ostream& csv,
                   std::ostream& log) {
  if (!options.output_dir.empty()) std::filesystem::create_directories(options.output_dir);

  std::vector<FrameOutcome> outcomes(frames.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < frames.size(); i = next++) {
      outcomes[i] = process_frame(frames[i], classifier, profiles, options);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(frames.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  IndexRun run;
  csv << kIndexCsvHeader << '\n';
  for (auto& o : outcomes) {
    if (o.record) {
      csv << format_csv_row(*o.record) << '\n';
    } else {
      ++run.failed;
      log << "warning: skipping frame " << o.frame.path.string() << ": " << o.error << '\n';
      csv << format_gap_row(o.frame.timestamp, o.frame.camera_id) << '\n';
    }
    if (o.emitted) ++run.emitted;
  }
  run.outcomes = std::move(outcomes);
  return run;
}

}  // namespace scum
