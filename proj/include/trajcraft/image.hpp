#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trajcraft {

struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;

  bool operator==(const Rgb&) const = default;
};

/// Row-major height x width raster. Indexing is (row, col) to match image conventions.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int row, int col) { return data_[static_cast<size_t>(row) * width_ + col]; }
  const T& at(int row, int col) const { return data_[static_cast<size_t>(row) * width_ + col]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// RGB in [0,1].
using ColorFrame = Grid<Rgb>;
/// Scene-unit depth; 0 marks an invalid pixel.
using DepthFrame = Grid<float>;
/// Binary coverage, stored as 0/1.
using MaskFrame = Grid<std::uint8_t>;

using Video = std::vector<ColorFrame>;
using DepthVideo = std::vector<DepthFrame>;
using MaskVideo = std::vector<MaskFrame>;

std::uint8_t quantize_unit(float v);
inline float dequantize_unit(std::uint8_t v) { return static_cast<float>(v) / 255.0f; }

/// Rounds every channel to the nearest 8-bit level, as a PNG round trip would.
ColorFrame quantized(const ColorFrame& frame);

/// Fraction of pixels with mask == 1.
double coverage(const MaskFrame& mask);
double coverage(const MaskVideo& masks);

/// Throws ShapeError naming `what` when the two grids differ in size.
template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const std::string& what);

}  // namespace trajcraft

#include "trajcraft/errors.hpp"

namespace trajcraft {

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw ShapeError(what + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

}  // namespace trajcraft
