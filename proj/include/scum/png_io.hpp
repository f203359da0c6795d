#pragma once

#include <filesystem>

#include "scum/image.hpp"

namespace scum::png {

/// Decodes any PNG into 8-bit RGB. 8-bit RGB sources round-trip losslessly.
ImageBuffer read_rgb(const std::filesystem::path& path);

/// Decodes any PNG into 8-bit gray. 1-bit sources expand to {0, 255}.
GrayImage read_gray(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const ImageBuffer& image);
void write_gray(const std::filesystem::path& path, const GrayImage& image);

}  // namespace scum::png
