#include "scum/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "scum/errors.hpp"

namespace scum::png {

namespace {

class PngReader {
 public:
  explicit PngReader(const std::filesystem::path& path) {
    std::memset(&image_, 0, sizeof(image_));
    image_.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image_, path.c_str()) == 0) {
      std::string msg = "cannot read PNG " + path.string() + ": " + image_.message;
      png_image_free(&image_);
      throw IoError(msg);
    }
    path_ = path;
  }
  ~PngReader() { png_image_free(&image_); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  std::size_t width() const { return image_.width; }
  std::size_t height() const { return image_.height; }

  std::vector<std::uint8_t> finish(png_uint_32 format) {
    image_.format = format;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image_));
    if (png_image_finish_read(&image_, nullptr, buffer.data(), 0, nullptr) == 0) {
      throw IoError("cannot decode PNG " + path_.string() + ": " + image_.message);
    }
    return buffer;
  }

 private:
  png_image image_{};
  std::filesystem::path path_;
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

// Full libpng API so the zlib level can be set; frames are noisy and the
// default level spends most of its time for a few percent of size.
void write(const std::filesystem::path& path, std::size_t width, std::size_t height,
           int color_type, std::size_t channels, const std::uint8_t* data) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(data + y * width * channels);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageBuffer read_rgb(const std::filesystem::path& path) {
  PngReader reader(path);
  const auto w = reader.width();
  const auto h = reader.height();
  return ImageBuffer(w, h, reader.finish(PNG_FORMAT_RGB));
}

GrayImage read_gray(const std::filesystem::path& path) {
  PngReader reader(path);
  const auto w = reader.width();
  const auto h = reader.height();
  return GrayImage(w, h, reader.finish(PNG_FORMAT_GRAY));
}

void write_rgb(const std::filesystem::path& path, const ImageBuffer& image) {
  if (image.empty()) throw DimensionMismatch("cannot write an empty image");
  write(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 3, image.data().data());
}

void write_gray(const std::filesystem::path& path, const GrayImage& image) {
  if (image.empty()) throw DimensionMismatch("cannot write an empty image");
  write(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 1, image.data().data());
}

}  // namespace scum::png
