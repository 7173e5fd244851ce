#pragma once

#include <string>

#include "splat/rasterizer.hpp"

namespace splat {

// Binary PPM (P6), 8 bits per channel. Saving quantizes with round(v*255);
// loading divides by 255, so a round trip moves a channel by at most 1/510.
void save_image(const Image& img, const std::string& path);
Image load_image(const std::string& path);

}  // namespace splat
