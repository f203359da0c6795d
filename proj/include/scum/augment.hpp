#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "scum/image.hpp"
#include "scum/rng.hpp"

namespace scum {

inline constexpr std::size_t kClassCount = 3;

/// Water-surface classes. The numeric value is the label index.
enum class ClassId : std::size_t { EarlyScum = 0, GrowThickScum = 1, Background = 2 };

std::string_view class_name(ClassId id);

/// Class weights on the probability simplex.
class SoftLabel {
 public:
  static constexpr double kTolerance = 1e-9;

  /// One-hot label for class C0.
  SoftLabel() : weights_{1.0, 0.0, 0.0} {}

  /// Throws InvalidParam unless every weight is in [0, 1] and the weights
  /// sum to 1 within kTolerance.
  explicit SoftLabel(std::array<double, kClassCount> weights);

  static SoftLabel one_hot(ClassId id);

  const std::array<double, kClassCount>& weights() const noexcept { return weights_; }
  double operator[](std::size_t k) const { return weights_[k]; }
  ClassId argmax() const;
  bool is_one_hot() const;

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  std::array<double, kClassCount> weights_;
};

struct LabeledPatch {
  ImageBuffer image;
  SoftLabel label;

  friend bool operator==(const LabeledPatch&, const LabeledPatch&) = default;
};

enum class AugmentPolicy { None, Mixup, Cutout, Ricap };

std::string_view to_string(AugmentPolicy policy);
/// Accepts none/baseline, mixup, cutout, ricap. Throws InvalidParam otherwise.
AugmentPolicy parse_augment_policy(std::string_view text);

/// Hyperparameters for the mixture operators, validated on construction.
class AugmentParams {
 public:
  static constexpr double kDefaultMixupAlpha = 0.2;
  static constexpr double kDefaultCutoutDropRate = 0.6;
  static constexpr std::uint8_t kDefaultCutoutFill = 128;

  AugmentParams() = default;
  AugmentParams(double mixup_alpha, double cutout_drop_rate,
                std::uint8_t cutout_fill = kDefaultCutoutFill);

  double mixup_alpha() const noexcept { return mixup_alpha_; }
  double cutout_drop_rate() const noexcept { return cutout_drop_rate_; }
  std::uint8_t cutout_fill() const noexcept { return cutout_fill_; }

 private:
  double mixup_alpha_ = kDefaultMixupAlpha;
  double cutout_drop_rate_ = kDefaultCutoutDropRate;
  std::uint8_t cutout_fill_ = kDefaultCutoutFill;
};

/// One draw from Beta(alpha, alpha), built from two Gamma(alpha, 1) draws.
double sample_beta(Rng& rng, double alpha);

/// Convex combination lambda * a + (1 - lambda) * b of images and labels.
/// Pixels are mixed in real arithmetic and rounded half-up to 8 bits.
LabeledPatch mixup(const LabeledPatch& a, const LabeledPatch& b, double lambda);

/// Erased rectangle, half-open: [x0, x1) x [y0, y1).
struct CutoutRegion {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t side = 0;  // requested square side before clipping

  std::size_t area() const noexcept { return (x1 - x0) * (y1 - y0); }
  bool interior() const noexcept { return area() == side * side; }
};

struct CutoutResult {
  LabeledPatch sample;
  CutoutRegion region;
};

/// round(sqrt(drop_rate * height * width)).
std::size_t cutout_side(double drop_rate, std::size_t height, std::size_t width);

/// Square of `side` pixels centered on (center_x, center_y), clipped to the
/// image. The top-left corner sits side/2 pixels up and left of the center.
CutoutRegion cutout_region(std::size_t side, std::size_t center_x, std::size_t center_y,
                           std::size_t width, std::size_t height);

/// Regional dropout: fills one square of area ~drop_rate * H * W, centered
/// uniformly over the patch and clipped at the borders. The label is kept.
CutoutResult cutout(const LabeledPatch& a, double drop_rate, Rng& rng,
                    std::uint8_t fill = AugmentParams::kDefaultCutoutFill);

/// Paints `region` of a copy of `a` with `fill`.
LabeledPatch apply_cutout(const LabeledPatch& a, const CutoutRegion& region, std::uint8_t fill);

/// One of the four RICAP tiles: a crop of the source at (src_x, src_y)
/// pasted at (dst_x, dst_y).
struct RicapTile {
  std::size_t src_x = 0, src_y = 0;
  std::size_t dst_x = 0, dst_y = 0;
  std::size_t width = 0, height = 0;
};

/// Boundary position and the four crops (upper-left, upper-right,
/// lower-left, lower-right).
struct RicapLayout {
  std::size_t boundary_w = 0;
  std::size_t boundary_h = 0;
  std::array<RicapTile, 4> tiles{};
  std::array<double, 4> area_weights{};  // w_m * h_m / (W * H)
};

/// Deterministic layout for a given boundary and crop origins. Origins are
/// clamped to the valid range [0, W - w_m] x [0, H - h_m].
RicapLayout ricap_layout(std::size_t width, std::size_t height, std::size_t boundary_w,
                         std::size_t boundary_h,
                         const std::array<std::array<std::size_t, 2>, 4>& origins = {});

/// Samples the boundary from the discrete uniform on [0, W] x [0, H] and each
/// crop origin uniformly over its valid range.
RicapLayout sample_ricap_layout(Rng& rng, std::size_t width, std::size_t height);

/// Patches the four sources together according to `layout`; label is
/// sum_m area_weight_m * label_m.
LabeledPatch ricap_compose(const LabeledPatch& s1, const LabeledPatch& s2, const LabeledPatch& s3,
                           const LabeledPatch& s4, const RicapLayout& layout);

/// Random image cropping and patching ("anywhere" variant).
LabeledPatch ricap(const LabeledPatch& s1, const LabeledPatch& s2, const LabeledPatch& s3,
                   const LabeledPatch& s4, Rng& rng);

}  // namespace scum
