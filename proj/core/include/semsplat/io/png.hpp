#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsplat/image.hpp"

namespace semsplat::io {

/// 8-bit RGB(A) or gray PNG as floats in [0, 1]; alpha is dropped.
Image<float> read_png_rgb(const std::string& path);
/// Quantizes to 8-bit RGB with round-to-nearest. Output bytes depend only
/// on the pixel values.
void write_png_rgb(const std::string& path, const Image<float>& image);
std::vector<std::uint8_t> encode_png_rgb(const Image<float>& image);

/// 16-bit single-channel label map.
LabelMap read_label_png(const std::string& path);
void write_label_png(const std::string& path, const LabelMap& labels);

/// 8-bit single-channel image (masks are written as 0 / 255 by the caller).
void write_png_gray(const std::string& path, const Image<std::uint8_t>& image);
std::vector<std::uint8_t> encode_png_gray(const Image<std::uint8_t>& image);

}  // namespace semsplat::io
