#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tagmap/detection.hpp"

namespace tagmap {

// 8-bit grayscale PNG of a constant shade.
std::string encode_png_gray(unsigned width, unsigned height, std::uint8_t shade);

// Pixel size from a PNG IHDR or JPEG SOFn header; nullopt for anything else.
std::optional<ImageDims> image_dimensions(std::string_view bytes);

}  // namespace tagmap
