#pragma once

#include <string>

#include "tmla/image.hpp"

namespace tmla {

// 8-bit PNG (gray or RGB) and binary PPM/PGM, dispatched on extension.
// Samples are scaled by 1/255 on load and quantized with round() on save.
Image load_image(const std::string& path);
void save_image(const std::string& path, const Image& img);

Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);
Image load_pnm(const std::string& path);
void save_pnm(const std::string& path, const Image& img);

}  // namespace tmla
