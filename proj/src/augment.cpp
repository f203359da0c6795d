#include "scum/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scum/errors.hpp"

namespace scum {

namespace {

void require_same_dims(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatch("patch dimensions differ: " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()));
  }
}

// Mixed weights can overshoot [0, 1] by an ulp.
SoftLabel label_from_mixture(std::array<double, kClassCount> w) {
  for (auto& x : w) x = std::clamp(x, 0.0, 1.0);
  return SoftLabel(w);
}

}  // namespace

std::string_view class_name(ClassId id) {
  switch (id) {
    case ClassId::EarlyScum:
      return "early_scum";
    case ClassId::GrowThickScum:
      return "grow_thick_scum";
    case ClassId::Background:
      return "background";
  }
  return "unknown";
}

SoftLabel::SoftLabel(std::array<double, kClassCount> weights) : weights_(weights) {
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidParam("soft label weight outside [0, 1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw InvalidParam("soft label weights sum to " + std::to_string(sum) + ", not 1");
  }
}

SoftLabel SoftLabel::one_hot(ClassId id) {
  std::array<double, kClassCount> w{0.0, 0.0, 0.0};
  w[static_cast<std::size_t>(id)] = 1.0;
  return SoftLabel(w);
}

ClassId SoftLabel::argmax() const {
  const auto it = std::max_element(weights_.begin(), weights_.end());
  return static_cast<ClassId>(std::distance(weights_.begin(), it));
}

bool SoftLabel::is_one_hot() const {
  return std::count(weights_.begin(), weights_.end(), 1.0) == 1 &&
         std::count(weights_.begin(), weights_.end(), 0.0) == kClassCount - 1;
}

std::string_view to_string(AugmentPolicy policy) {
  switch (policy) {
    case AugmentPolicy::None:
      return "baseline";
    case AugmentPolicy::Mixup:
      return "mixup";
    case AugmentPolicy::Cutout:
      return "cutout";
    case AugmentPolicy::Ricap:
      return "ricap";
  }
  return "unknown";
}

AugmentPolicy parse_augment_policy(std::string_view text) {
  if (text == "none" || text == "baseline") return AugmentPolicy::None;
  if (text == "mixup") return AugmentPolicy::Mixup;
  if (text == "cutout") return AugmentPolicy::Cutout;
  if (text == "ricap") return AugmentPolicy::Ricap;
  throw InvalidParam("unknown augment policy '" + std::string(text) + "'");
}

AugmentParams::AugmentParams(double mixup_alpha, double cutout_drop_rate, std::uint8_t cutout_fill)
    : mixup_alpha_(mixup_alpha), cutout_drop_rate_(cutout_drop_rate), cutout_fill_(cutout_fill) {
  if (!(mixup_alpha > 0.0) || !std::isfinite(mixup_alpha)) {
    throw InvalidParam("mixup alpha must be > 0");
  }
  if (!(cutout_drop_rate > 0.0 && cutout_drop_rate < 1.0)) {
    throw InvalidParam("cutout drop rate must be in (0, 1)");
  }
}

double sample_beta(Rng& rng, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParam("beta alpha must be > 0");
  const double log_x = rng.log_gamma_draw(alpha);
  const double log_y = rng.log_gamma_draw(alpha);
  // x / (x + y) = 1 / (1 + exp(log_y - log_x))
  return 1.0 / (1.0 + std::exp(log_y - log_x));
}

LabeledPatch mixup(const LabeledPatch& a, const LabeledPatch& b, double lambda) {
  require_same_dims(a.image, b.image);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParam("mixup lambda must be in [0, 1]");
  if (lambda == 1.0) return a;
  if (lambda == 0.0) return b;

  ImageBuffer out(a.image.width(), a.image.height());
  const auto pa = a.image.data();
  const auto pb = b.image.data();
  auto po = out.data();
  const double mu = 1.0 - lambda;
  for (std::size_t i = 0; i < po.size(); ++i) {
    const double v = lambda * pa[i] + mu * pb[i];
    po[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  std::array<double, kClassCount> w{};
  for (std::size_t k = 0; k < kClassCount; ++k) w[k] = lambda * a.label[k] + mu * b.label[k];
  return LabeledPatch{std::move(out), label_from_mixture(w)};
}

std::size_t cutout_side(double drop_rate, std::size_t height, std::size_t width) {
  if (!(drop_rate > 0.0 && drop_rate < 1.0)) throw InvalidParam("drop rate must be in (0, 1)");
  const double side = std::round(std::sqrt(drop_rate * static_cast<double>(height * width)));
  return static_cast<std::size_t>(side);
}

CutoutRegion cutout_region(std::size_t side, std::size_t center_x, std::size_t center_y,
                           std::size_t width, std::size_t height) {
  // Work in signed coordinates so the square may hang off the top/left edge.
  const auto half = static_cast<std::ptrdiff_t>(side / 2);
  const auto left = static_cast<std::ptrdiff_t>(center_x) - half;
  const auto top = static_cast<std::ptrdiff_t>(center_y) - half;
  const auto right = left + static_cast<std::ptrdiff_t>(side);
  const auto bottom = top + static_cast<std::ptrdiff_t>(side);
  auto clip = [](std::ptrdiff_t v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(hi)));
  };
  CutoutRegion r;
  r.side = side;
  r.x0 = clip(left, width);
  r.x1 = clip(right, width);
  r.y0 = clip(top, height);
  r.y1 = clip(bottom, height);
  return r;
}

LabeledPatch apply_cutout(const LabeledPatch& a, const CutoutRegion& region, std::uint8_t fill) {
  LabeledPatch out = a;
  for (std::size_t y = region.y0; y < region.y1; ++y) {
    auto row = out.image.row(y);
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(region.x0 * ImageBuffer::kChannels),
              row.begin() + static_cast<std::ptrdiff_t>(region.x1 * ImageBuffer::kChannels), fill);
  }
  return out;
}

CutoutResult cutout(const LabeledPatch& a, double drop_rate, Rng& rng, std::uint8_t fill) {
  const std::size_t w = a.image.width();
  const std::size_t h = a.image.height();
  if (a.image.empty()) throw DimensionMismatch("cutout on an empty patch");
  const std::size_t side = cutout_side(drop_rate, h, w);
  const std::size_t cx = rng.uniform_int(0, w - 1);
  const std::size_t cy = rng.uniform_int(0, h - 1);
  const CutoutRegion region = cutout_region(side, cx, cy, w, h);
  return CutoutResult{apply_cutout(a, region, fill), region};
}

RicapLayout ricap_layout(std::size_t width, std::size_t height, std::size_t boundary_w,
                         std::size_t boundary_h,
                         const std::array<std::array<std::size_t, 2>, 4>& origins) {
  if (boundary_w > width || boundary_h > height) {
    throw InvalidParam("RICAP boundary outside the patch");
  }
  RicapLayout layout;
  layout.boundary_w = boundary_w;
  layout.boundary_h = boundary_h;
  const std::array<std::size_t, 4> widths{boundary_w, width - boundary_w, boundary_w,
                                          width - boundary_w};
  const std::array<std::size_t, 4> heights{boundary_h, boundary_h, height - boundary_h,
                                           height - boundary_h};
  const std::array<std::size_t, 4> dst_x{0, boundary_w, 0, boundary_w};
  const std::array<std::size_t, 4> dst_y{0, 0, boundary_h, boundary_h};
  const double total = static_cast<double>(width * height);
  for (std::size_t m = 0; m < 4; ++m) {
    RicapTile& t = layout.tiles[m];
    t.width = widths[m];
    t.height = heights[m];
    t.src_x = std::min(origins[m][0], width - t.width);
    t.src_y = std::min(origins[m][1], height - t.height);
    t.dst_x = dst_x[m];
    t.dst_y = dst_y[m];
    layout.area_weights[m] = static_cast<double>(t.width * t.height) / total;
  }
  return layout;
}

RicapLayout sample_ricap_layout(Rng& rng, std::size_t width, std::size_t height) {
  const std::size_t bw = rng.uniform_int(0, width);
  const std::size_t bh = rng.uniform_int(0, height);
  const std::array<std::size_t, 4> widths{bw, width - bw, bw, width - bw};
  const std::array<std::size_t, 4> heights{bh, bh, height - bh, height - bh};
  std::array<std::array<std::size_t, 2>, 4> origins{};
  for (std::size_t m = 0; m < 4; ++m) {
    origins[m][0] = rng.uniform_int(0, width - widths[m]);
    origins[m][1] = rng.uniform_int(0, height - heights[m]);
  }
  return ricap_layout(width, height, bw, bh, origins);
}

LabeledPatch ricap_compose(const LabeledPatch& s1, const LabeledPatch& s2, const LabeledPatch& s3,
                           const LabeledPatch& s4, const RicapLayout& layout) {
  const std::array<const LabeledPatch*, 4> sources{&s1, &s2, &s3, &s4};
  for (const auto* s : sources) require_same_dims(s1.image, s->image);
  const std::size_t width = s1.image.width();
  const std::size_t height = s1.image.height();
  if (layout.boundary_w > width || layout.boundary_h > height) {
    throw DimensionMismatch("RICAP layout does not match the patch size");
  }

  ImageBuffer out(width, height);
  std::array<double, kClassCount> w{};
  for (std::size_t m = 0; m < 4; ++m) {
    const RicapTile& t = layout.tiles[m];
    blit(sources[m]->image, t.src_x, t.src_y, t.width, t.height, out, t.dst_x, t.dst_y);
    for (std::size_t k = 0; k < kClassCount; ++k) {
      w[k] += layout.area_weights[m] * sources[m]->label[k];
    }
  }
  return LabeledPatch{std::move(out), label_from_mixture(w)};
}

LabeledPatch ricap(const LabeledPatch& s1, const LabeledPatch& s2, const LabeledPatch& s3,
                   const LabeledPatch& s4, Rng& rng) {
  for (const auto* s : {&s2, &s3, &s4}) require_same_dims(s1.image, s->image);
  const RicapLayout layout = sample_ricap_layout(rng, s1.image.width(), s1.image.height());
  return ricap_compose(s1, s2, s3, s4, layout);
}

}  // namespace scum
