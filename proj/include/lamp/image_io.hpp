#pragma once

#include <string>

#include "lamp/image.hpp"

namespace lamp {

// Decodes a PNG or JPEG file (sniffed by signature, not extension) into an
// 8-bit RGB image. Grayscale and paletted inputs are expanded; alpha is
// dropped.
Image load_image(const std::string& path);

// Writes a real-valued plane as an 8-bit grayscale PNG. Values are scaled by
// 255, rounded to nearest and clamped.
void save_png_gray(const std::string& path, const Plane& plane);

} // namespace lamp
