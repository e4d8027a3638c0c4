#pragma once

#include <filesystem>

#include "sdmae/image.hpp"

namespace sdmae {

/// Decodes an 8- or 16-bit PNG into [0,1] values. Palette images are expanded;
/// gray, gray+alpha, RGB and RGBA keep their stored channel count.
Image read_png(const std::filesystem::path& path);

/// Writes 1 (gray) or 3 (RGB) channels as 8-bit PNG; values are clamped to [0,1].
/// Output bytes depend only on the pixel values.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace sdmae
