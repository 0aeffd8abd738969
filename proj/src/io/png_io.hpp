#pragma once

#include <string>

#include "core/image.hpp"

namespace topdown {

// Lossless 8-bit RGB PNG. Fixed encoder settings so identical pixels produce
// identical bytes.
void write_png(const std::string& path, const Image8& img);
Image8 read_png(const std::string& path);

}  // namespace topdown
