#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace urbanforge {

/// Interleaved row-major image, row 0 at the top.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    assert(x >= 0 && x < width && y >= 0 && y < height && c >= 0 && c < channels);
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }

  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  std::span<T> pixel(int x, int y) { return {data.data() + index(x, y), static_cast<std::size_t>(channels)}; }
  std::span<const T> pixel(int x, int y) const {
    return {data.data() + index(x, y), static_cast<std::size_t>(channels)};
  }

  bool operator==(const Image&) const = default;
};

using RgbImage = Image<std::uint8_t>;
using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

/// Bilinear sample at continuous pixel coordinates (pixel centers at integer + 0.5), clamped at borders.
template <typename T>
void sample_bilinear(const Image<T>& img, double px, double py, std::span<double> out) {
  const double fx = std::clamp(px - 0.5, 0.0, static_cast<double>(img.width - 1));
  const double fy = std::clamp(py - 0.5, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double a = img.at(x0, y0, c) * (1 - tx) + img.at(x1, y0, c) * tx;
    const double b = img.at(x0, y1, c) * (1 - tx) + img.at(x1, y1, c) * tx;
    out[c] = a * (1 - ty) + b * ty;
  }
}

/// Copy of the sub-rectangle [x0, x0+w) x [y0, y0+h).
template <typename T>
Image<T> crop(const Image<T>& img, int x0, int y0, int w, int h) {
  Image<T> out(w, h, img.channels);
  for (int y = 0; y < h; ++y) {
    const auto* src = img.data.data() + img.index(x0, y0 + y);
    std::copy(src, src + static_cast<std::size_t>(w) * img.channels, out.data.data() + out.index(0, y));
  }
  return out;
}

template <typename T>
void blit(Image<T>& dst, const Image<T>& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    const auto* s = src.data.data() + src.index(0, y);
    std::copy(s, s + static_cast<std::size_t>(src.width) * src.channels, dst.data.data() + dst.index(x0, y0 + y));
  }
}

}  // namespace urbanforge
