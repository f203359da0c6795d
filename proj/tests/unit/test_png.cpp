#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "scum/errors.hpp"
#include "scum/png_io.hpp"
#include "scum/rng.hpp"

using namespace scum;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "scumwatch_png_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("RGB PNG round trip is lossless") {
  Rng rng(7);
  ImageBuffer img(97, 41);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.next_u64());
  const auto path = scratch("rgb.png");
  png::write_rgb(path, img);
  CHECK(png::read_rgb(path) == img);
}

TEST_CASE("gray PNG round trip is lossless") {
  GrayImage img(64, 33);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i * 7);
  const auto path = scratch("gray.png");
  png::write_gray(path, img);
  CHECK(png::read_gray(path) == img);
}

TEST_CASE("reading a non-PNG fails with an error") {
  const auto path = scratch("bogus.png");
  std::ofstream(path) << "not an image";
  CHECK_THROWS_AS(png::read_rgb(path), Error);
  CHECK_THROWS_AS(png::read_rgb(scratch("missing.png")), Error);
}
