#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace semsplat {

/// Interleaved (row-major, channel-last) image buffer.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }

  template <typename U>
  Image<U> cast() const {
    Image<U> out;
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const Image&) const = default;
};

/// Per-pixel class indices; 0 is the undetected class.
using LabelMap = Image<std::uint16_t>;

}  // namespace semsplat
