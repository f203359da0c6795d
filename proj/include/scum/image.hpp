#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scum {

/// Owned interleaved RGB raster, 8 bits per channel, row-major.
///
/// A default-constructed buffer is empty (0x0) and only useful as a
/// placeholder; every other constructor requires width, height >= 1.
class ImageBuffer {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  ImageBuffer(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return data_[(y * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return data_[(y * width_ + x) * kChannels + c];
  }

  std::span<const std::uint8_t> row(std::size_t y) const {
    return std::span<const std::uint8_t>(data_).subspan(y * width_ * kChannels, width_ * kChannels);
  }
  std::span<std::uint8_t> row(std::size_t y) {
    return std::span<std::uint8_t>(data_).subspan(y * width_ * kChannels, width_ * kChannels);
  }

  void set_pixel(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &data_[(y * width_ + x) * kChannels];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 8-bit raster. Used for heatmaps, binary masks and
/// background masks.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Geometry of the patch grid laid over the lower part of a frame.
struct PatchGridSpec {
  std::size_t rows = 4;
  std::size_t cols = 5;
  std::size_t patch_height = 128;
  std::size_t patch_width = 256;
  std::size_t crop_top = 208;

  std::size_t patch_count() const noexcept { return rows * cols; }
  std::size_t grid_height() const noexcept { return rows * patch_height; }
  std::size_t grid_width() const noexcept { return cols * patch_width; }
  std::size_t frame_height() const noexcept { return crop_top + grid_height(); }

  /// Default 4x5 grid of 128x256 patches with crop_top chosen so the grid
  /// exactly tiles the bottom of a frame of the given height.
  static PatchGridSpec for_frame_height(std::size_t frame_height);

  friend bool operator==(const PatchGridSpec&, const PatchGridSpec&) = default;
};

struct Patch {
  ImageBuffer pixels;
  std::size_t grid_row = 0;
  std::size_t grid_col = 0;
};

/// Removes the top crop_top rows. Pixel values are copied untouched.
/// Throws DimensionMismatch unless frame.height > crop_top and
/// frame.width == cols * patch_width.
ImageBuffer crop_far_region(const ImageBuffer& frame, const PatchGridSpec& spec);

/// Cuts a cropped frame into rows*cols patches in row-major order
/// (index = grid_row * cols + grid_col).
std::vector<Patch> extract_patches(const ImageBuffer& cropped, const PatchGridSpec& spec);

/// Inverse of extract_patches.
ImageBuffer assemble_patches(std::span<const Patch> patches, const PatchGridSpec& spec);

/// Copy of the w x h rectangle with top-left corner (x, y).
ImageBuffer sub_image(const ImageBuffer& src, std::size_t x, std::size_t y, std::size_t w,
                      std::size_t h);

/// Copies a w x h block from src(sx, sy) into dst(dx, dy).
void blit(const ImageBuffer& src, std::size_t sx, std::size_t sy, std::size_t w, std::size_t h,
          ImageBuffer& dst, std::size_t dx, std::size_t dy);

}  // namespace scum
