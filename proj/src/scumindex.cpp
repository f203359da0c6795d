#include "scum/scumindex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scum/errors.hpp"

namespace scum {

std::string_view to_string(ClassMode mode) {
  return mode == ClassMode::C1Only ? "c1" : "c0+c1";
}

ClassMode parse_class_mode(std::string_view text) {
  if (text == "c1" || text == "C1") return ClassMode::C1Only;
  if (text == "c0+c1" || text == "C0+C1") return ClassMode::C0PlusC1;
  throw InvalidParam("unknown class mode '" + std::string(text) + "' (expected c1 or c0+c1)");
}

ProbabilityMatrix::ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells,
                                     ClassMode mode)
    : rows_(rows), cols_(cols), cells_(std::move(cells)), mode_(mode) {
  if (cells_.size() != rows * cols) throw InvalidParam("matrix cell count does not match shape");
  for (double v : cells_) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidParam("matrix cell outside [0, 1]");
  }
}

double ProbabilityMatrix::mean() const {
  if (cells_.empty()) return 0.0;
  return std::accumulate(cells_.begin(), cells_.end(), 0.0) / static_cast<double>(cells_.size());
}

bool ProbabilityMatrix::all_zero() const {
  return std::all_of(cells_.begin(), cells_.end(), [](double v) { return v == 0.0; });
}

ProbabilityMatrix assemble_matrix(std::span<const Probabilities> patch_probs, ClassMode mode,
                                  const PatchGridSpec& spec) {
  if (patch_probs.size() != spec.patch_count()) {
    throw CountMismatch("expected " + std::to_string(spec.patch_count()) +
                        " patch probability vectors, got " + std::to_string(patch_probs.size()));
  }
  std::vector<double> cells;
  cells.reserve(patch_probs.size());
  for (const auto& p : patch_probs) {
    const double v = mode == ClassMode::C1Only ? p[1] : std::min(1.0, p[0] + p[1]);
    cells.push_back(std::clamp(v, 0.0, 1.0));
  }
  return ProbabilityMatrix(spec.rows, spec.cols, std::move(cells), mode);
}

ProbabilityMatrix apply_probability_floor(const ProbabilityMatrix& m, double floor) {
  if (!(floor >= 0.0 && floor < 1.0)) throw InvalidParam("probability floor must be in [0, 1)");
  if (m.mean() > floor) return m;
  return ProbabilityMatrix(m.rows(), m.cols(), std::vector<double>(m.cells().size(), 0.0),
                           m.class_mode());
}

std::uint8_t probability_to_intensity(double p) {
  const double v = std::floor(255.0 * std::clamp(p, 0.0, 1.0) + 0.5);
  return static_cast<std::uint8_t>(v);
}

GrayImage render_heatmap(const ProbabilityMatrix& m, const PatchGridSpec& spec) {
  if (m.rows() != spec.rows || m.cols() != spec.cols) {
    throw DimensionMismatch("matrix shape does not match the patch grid");
  }
  GrayImage out(spec.grid_width(), spec.grid_height());
  auto data = out.data();
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const std::uint8_t v = probability_to_intensity(m.at(r, c));
      for (std::size_t y = r * spec.patch_height; y < (r + 1) * spec.patch_height; ++y) {
        auto first = data.begin() + static_cast<std::ptrdiff_t>(y * out.width() + c * spec.patch_width);
        std::fill(first, first + static_cast<std::ptrdiff_t>(spec.patch_width), v);
      }
    }
  }
  return out;
}

GrayImage binarize(const GrayImage& heatmap, std::uint8_t threshold) {
  GrayImage mask(heatmap.width(), heatmap.height());
  std::transform(heatmap.data().begin(), heatmap.data().end(), mask.data().begin(),
                 [threshold](std::uint8_t v) { return static_cast<std::uint8_t>(v >= threshold); });
  return mask;
}

CameraProfile CameraProfile::all_river(std::string camera_id, const PatchGridSpec& grid) {
  CameraProfile p;
  p.camera_id = std::move(camera_id);
  p.grid = grid;
  p.background = GrayImage(grid.grid_width(), grid.grid_height(), 0);
  return p;
}

std::uint64_t CameraProfile::river_pixel_count() const {
  return static_cast<std::uint64_t>(
      std::count(background.data().begin(), background.data().end(), std::uint8_t{0}));
}

void CameraProfile::validate() const {
  if (background.width() != grid.grid_width() || background.height() != grid.grid_height()) {
    throw DimensionMismatch("background mask for camera '" + camera_id + "' is " +
                            std::to_string(background.width()) + "x" +
                            std::to_string(background.height()) + ", cropped frame is " +
                            std::to_string(grid.grid_width()) + "x" +
                            std::to_string(grid.grid_height()));
  }
  if (!(probability_floor >= 0.0 && probability_floor < 1.0)) {
    throw InvalidParam("probability floor must be in [0, 1)");
  }
  if (river_pixel_count() == 0) {
    throw EmptyRiver("background mask for camera '" + camera_id + "' covers every pixel");
  }
}

RatioResult compute_ratio(const GrayImage& mask, const CameraProfile& profile) {
  const GrayImage& bg = profile.background;
  if (mask.width() != bg.width() || mask.height() != bg.height()) {
    throw DimensionMismatch("mask and background mask dimensions differ");
  }
  RatioResult r;
  const auto m = mask.data();
  const auto b = bg.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (b[i] != 0) continue;
    ++r.river_pixels;
    if (m[i] != 0) ++r.scum_pixels;
  }
  if (r.river_pixels == 0) throw EmptyRiver("no river pixels for camera '" + profile.camera_id + "'");
  r.ratio_percent = 100.0 * static_cast<double>(r.scum_pixels) / static_cast<double>(r.river_pixels);
  return r;
}

FrameAnalysis analyze_probabilities(std::span<const Probabilities> patch_probs,
                                    const CameraProfile& profile) {
  FrameAnalysis a;
  a.patch_probabilities.assign(patch_probs.begin(), patch_probs.end());
  a.raw_matrix = assemble_matrix(patch_probs, profile.class_mode, profile.grid);
  a.matrix = apply_probability_floor(a.raw_matrix, profile.probability_floor);
  a.heatmap = render_heatmap(a.matrix, profile.grid);
  a.mask = binarize(a.heatmap, profile.binarize_threshold);
  a.ratio = compute_ratio(a.mask, profile);
  return a;
}

FrameAnalysis analyze_frame(const ImageBuffer& frame, const Classifier& classifier,
                            const CameraProfile& profile) {
  const ImageBuffer cropped = crop_far_region(frame, profile.grid);
  const auto patches = extract_patches(cropped, profile.grid);
  std::vector<Probabilities> probs;
  probs.reserve(patches.size());
  for (const auto& p : patches) probs.push_back(classifier.predict(p.pixels));
  return analyze_probabilities(probs, profile);
}

}  // namespace scum
