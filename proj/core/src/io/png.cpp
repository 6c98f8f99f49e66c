#include "semsplat/io/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "io/binary.hpp"
#include "semsplat/error.hpp"

namespace semsplat::io {

namespace {

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> rows;  // tightly packed, big-endian samples
};

struct ReadSource {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
  if (src->pos + n > src->data.size()) png_error(png, "unexpected end of data");
  std::copy_n(src->data.data() + src->pos, n, out);
  src->pos += n;
}

void error_cb(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void warning_cb(png_structp, png_const_charp) {}

DecodedPng decode(const std::string& path, bool expand_to_8bit_rgb) {
  if (!std::filesystem::exists(path)) {
    throw FormatError(ErrorCode::kMissingFile, path, "file", "file does not exist");
  }
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw FormatError(ErrorCode::kBadMagic, path, "offset 0", "not a PNG file");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, error_cb, warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(ErrorCode::kIo, path, "decoder", "libpng initialization failed");
  }
  ReadSource src{bytes, 0};
  DecodedPng out;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(ErrorCode::kParse, path, "decoder", "corrupt PNG: " + message);
  }
  png_set_read_fn(png, &src, read_cb);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (expand_to_8bit_rgb) {
    if (depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.rows.resize(stride * out.height);
  row_ptrs.resize(out.height);
  for (int y = 0; y < out.height; ++y) row_ptrs[y] = out.rows.data() + stride * y;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_cb(png_structp png, png_bytep data, png_size_t n) {
  auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  buf->insert(buf->end(), data, data + n);
}

void flush_cb(png_structp) {}

std::vector<std::uint8_t> encode(int width, int height, int color_type, int bit_depth,
                                 const std::vector<std::uint8_t>& rows) {
  if (width <= 0 || height <= 0) throw_invalid("cannot encode an empty image");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, error_cb, warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> row_ptrs(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png encode failed: " + message);
  }
  png_set_write_fn(png, &out, write_cb, flush_cb);
  // Fixed settings so equal pixels always give equal bytes.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = rows.size() / height;
  for (int y = 0; y < height; ++y) row_ptrs[y] = const_cast<png_bytep>(rows.data() + stride * y);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::uint8_t quantize(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

}  // namespace

Image<float> read_png_rgb(const std::string& path) {
  const DecodedPng png = decode(path, true);
  if (png.channels != 3 || png.bit_depth != 8) {
    throw FormatError(ErrorCode::kParse, path, "header", "unsupported PNG layout");
  }
  Image<float> img(png.width, png.height, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = png.rows[i] / 255.0f;
  return img;
}

std::vector<std::uint8_t> encode_png_rgb(const Image<float>& image) {
  if (image.channels != 3) throw_invalid("encode_png_rgb expects 3 channels");
  std::vector<std::uint8_t> rows(image.data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = quantize(image.data[i]);
  return encode(image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png_rgb(const std::string& path, const Image<float>& image) {
  detail::write_file_atomic(path, encode_png_rgb(image));
}

LabelMap read_label_png(const std::string& path) {
  const DecodedPng png = decode(path, false);
  if (png.channels != 1 || png.bit_depth != 16) {
    throw FormatError(ErrorCode::kParse, path, "header",
                      "label map must be a 16-bit single-channel PNG (got " +
                          std::to_string(png.channels) + " channel(s), " +
                          std::to_string(png.bit_depth) + "-bit)");
  }
  LabelMap labels(png.width, png.height, 1);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    labels.data[i] = static_cast<std::uint16_t>((png.rows[2 * i] << 8) | png.rows[2 * i + 1]);
  }
  return labels;
}

void write_label_png(const std::string& path, const LabelMap& labels) {
  if (labels.channels != 1) throw_invalid("label maps have one channel");
  std::vector<std::uint8_t> rows(labels.data.size() * 2);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    rows[2 * i] = static_cast<std::uint8_t>(labels.data[i] >> 8);
    rows[2 * i + 1] = static_cast<std::uint8_t>(labels.data[i] & 0xff);
  }
  detail::write_file_atomic(path, encode(labels.width, labels.height, PNG_COLOR_TYPE_GRAY, 16, rows));
}

std::vector<std::uint8_t> encode_png_gray(const Image<std::uint8_t>& image) {
  if (image.channels != 1) throw_invalid("encode_png_gray expects 1 channel");
  return encode(image.width, image.height, PNG_COLOR_TYPE_GRAY, 8, image.data);
}

void write_png_gray(const std::string& path, const Image<std::uint8_t>& image) {
  detail::write_file_atomic(path, encode_png_gray(image));
}

}  // namespace semsplat::io
