#include "scum/image.hpp"

#include <algorithm>
#include <string>

#include "scum/errors.hpp"

namespace scum {

namespace {

void require_nonzero(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) {
    throw DimensionMismatch("image dimensions must be at least 1x1, got " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
}

std::string dims(std::size_t w, std::size_t h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height) {
  require_nonzero(width, height);
  data_.assign(width * height * kChannels, fill);
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require_nonzero(width, height);
  if (data_.size() != width * height * kChannels) {
    throw DimensionMismatch("RGB buffer of " + dims(width, height) + " needs " +
                            std::to_string(width * height * kChannels) + " bytes, got " +
                            std::to_string(data_.size()));
  }
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height) {
  require_nonzero(width, height);
  data_.assign(width * height, fill);
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require_nonzero(width, height);
  if (data_.size() != width * height) {
    throw DimensionMismatch("gray buffer of " + dims(width, height) + " needs " +
                            std::to_string(width * height) + " bytes, got " +
                            std::to_string(data_.size()));
  }
}

PatchGridSpec PatchGridSpec::for_frame_height(std::size_t frame_height) {
  PatchGridSpec spec;
  if (frame_height < spec.grid_height()) {
    throw DimensionMismatch("frame height " + std::to_string(frame_height) +
                            " is smaller than the patch grid height " +
                            std::to_string(spec.grid_height()));
  }
  spec.crop_top = frame_height - spec.grid_height();
  return spec;
}

ImageBuffer crop_far_region(const ImageBuffer& frame, const PatchGridSpec& spec) {
  if (frame.width() != spec.grid_width()) {
    throw DimensionMismatch("frame width " + std::to_string(frame.width()) +
                            " does not match grid width " + std::to_string(spec.grid_width()));
  }
  if (frame.height() <= spec.crop_top) {
    throw DimensionMismatch("frame height " + std::to_string(frame.height()) +
                            " must exceed crop_top " + std::to_string(spec.crop_top));
  }
  const auto bytes = frame.data();
  const std::size_t skip = spec.crop_top * frame.width() * ImageBuffer::kChannels;
  return ImageBuffer(frame.width(), frame.height() - spec.crop_top,
                     std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(skip),
                                               bytes.end()));
}

std::vector<Patch> extract_patches(const ImageBuffer& cropped, const PatchGridSpec& spec) {
  if (cropped.width() != spec.grid_width() || cropped.height() != spec.grid_height()) {
    throw DimensionMismatch("cropped frame is " + dims(cropped.width(), cropped.height()) +
                            ", grid expects " + dims(spec.grid_width(), spec.grid_height()));
  }
  std::vector<Patch> patches;
  patches.reserve(spec.patch_count());
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      patches.push_back(Patch{sub_image(cropped, c * spec.patch_width, r * spec.patch_height,
                                        spec.patch_width, spec.patch_height),
                              r, c});
    }
  }
  return patches;
}

ImageBuffer assemble_patches(std::span<const Patch> patches, const PatchGridSpec& spec) {
  if (patches.size() != spec.patch_count()) {
    throw DimensionMismatch("expected " + std::to_string(spec.patch_count()) + " patches, got " +
                            std::to_string(patches.size()));
  }
  ImageBuffer out(spec.grid_width(), spec.grid_height());
  for (const auto& p : patches) {
    if (p.pixels.width() != spec.patch_width || p.pixels.height() != spec.patch_height ||
        p.grid_row >= spec.rows || p.grid_col >= spec.cols) {
      throw DimensionMismatch("patch does not fit the grid");
    }
    blit(p.pixels, 0, 0, spec.patch_width, spec.patch_height, out, p.grid_col * spec.patch_width,
         p.grid_row * spec.patch_height);
  }
  return out;
}

ImageBuffer sub_image(const ImageBuffer& src, std::size_t x, std::size_t y, std::size_t w,
                      std::size_t h) {
  if (x + w > src.width() || y + h > src.height()) {
    throw DimensionMismatch("sub-image exceeds source bounds");
  }
  ImageBuffer out(w, h);
  blit(src, x, y, w, h, out, 0, 0);
  return out;
}

void blit(const ImageBuffer& src, std::size_t sx, std::size_t sy, std::size_t w, std::size_t h,
          ImageBuffer& dst, std::size_t dx, std::size_t dy) {
  if (sx + w > src.width() || sy + h > src.height() || dx + w > dst.width() ||
      dy + h > dst.height()) {
    throw DimensionMismatch("blit rectangle exceeds image bounds");
  }
  if (w == 0 || h == 0) return;
  constexpr auto C = ImageBuffer::kChannels;
  for (std::size_t row = 0; row < h; ++row) {
    auto from = src.row(sy + row).subspan(sx * C, w * C);
    auto to = dst.row(dy + row).subspan(dx * C, w * C);
    std::copy(from.begin(), from.end(), to.begin());
  }
}

}  // namespace scum
