#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scum/image.hpp"
#include "scum/model.hpp"
#include "scum/timestamp.hpp"

namespace scum {

/// Which class probabilities feed the matrix.
enum class ClassMode { C1Only, C0PlusC1 };

std::string_view to_string(ClassMode mode);
ClassMode parse_class_mode(std::string_view text);

/// rows x cols grid of per-patch scum probabilities, row-major.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  /// Throws InvalidParam if a cell is outside [0, 1] or the count is wrong.
  ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells,
                    ClassMode mode = ClassMode::C1Only);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  ClassMode class_mode() const noexcept { return mode_; }
  std::span<const double> cells() const noexcept { return cells_; }
  double at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  double mean() const;
  bool all_zero() const;

  friend bool operator==(const ProbabilityMatrix&, const ProbabilityMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cells_;
  ClassMode mode_ = ClassMode::C1Only;
};

/// Picks the scum probability of each patch: p1, or min(1, p0 + p1).
/// Throws CountMismatch unless exactly spec.rows * spec.cols vectors are given.
ProbabilityMatrix assemble_matrix(std::span<const Probabilities> patch_probs, ClassMode mode,
                                  const PatchGridSpec& spec = {});

/// Zeroes the whole matrix when its mean is <= floor; otherwise returns it
/// unchanged.
ProbabilityMatrix apply_probability_floor(const ProbabilityMatrix& m, double floor);

/// 8-bit intensity for a probability: floor(255 * p + 0.5).
std::uint8_t probability_to_intensity(double p);

/// Grayscale heatmap at cropped-frame resolution; each cell becomes a
/// constant patch_height x patch_width block.
GrayImage render_heatmap(const ProbabilityMatrix& m, const PatchGridSpec& spec);

/// 1 where intensity >= threshold, else 0.
GrayImage binarize(const GrayImage& heatmap, std::uint8_t threshold);

/// Per-camera constants for the index computation.
struct CameraProfile {
  std::string camera_id;
  PatchGridSpec grid;
  GrayImage background;  // nonzero = background, at cropped-frame resolution
  std::uint8_t binarize_threshold = 128;
  double probability_floor = 0.01;
  ClassMode class_mode = ClassMode::C1Only;

  /// Profile whose background is empty (every pixel is river).
  static CameraProfile all_river(std::string camera_id, const PatchGridSpec& grid = {});

  std::uint64_t river_pixel_count() const;
  /// Throws DimensionMismatch/EmptyRiver/InvalidParam when inconsistent.
  void validate() const;
};

struct RatioResult {
  double ratio_percent = 0.0;
  std::uint64_t scum_pixels = 0;
  std::uint64_t river_pixels = 0;
};

/// Scum-on-river ratio: scum pixels outside the background over all
/// non-background pixels, as a percentage.
RatioResult compute_ratio(const GrayImage& mask, const CameraProfile& profile);

struct IndexRecord {
  Timestamp timestamp;
  std::string camera_id;
  double ratio_percent = 0.0;
  double mean_probability = 0.0;
  std::uint64_t scum_pixels = 0;
  std::uint64_t river_pixels = 0;
};

/// Everything produced for one frame.
struct FrameAnalysis {
  std::vector<Probabilities> patch_probabilities;
  ProbabilityMatrix raw_matrix;
  ProbabilityMatrix matrix;  // after the probability floor
  GrayImage heatmap;
  GrayImage mask;
  RatioResult ratio;

  /// Mean of the raw (pre-floor) matrix.
  double mean_probability() const { return raw_matrix.mean(); }
};

/// Crop, classify every patch, and run the matrix -> heatmap -> mask ->
/// ratio chain.
FrameAnalysis analyze_frame(const ImageBuffer& frame, const Classifier& classifier,
                            const CameraProfile& profile);

/// Same chain starting from already-computed patch probabilities.
FrameAnalysis analyze_probabilities(std::span<const Probabilities> patch_probs,
                                    const CameraProfile& profile);

}  // namespace scum
