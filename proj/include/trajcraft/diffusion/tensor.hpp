#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajcraft/image.hpp"

namespace trajcraft::diffusion {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense frames x channels x height x width video, row-major.
template <typename T>
struct VideoTensor {
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  VideoTensor() = default;
  VideoTensor(int n, int c, int h, int w, T fill = T{0})
      : frames(n), channels(c), height(h), width(w),
        data(static_cast<size_t>(n) * c * h * w, fill) {}

  size_t size() const { return data.size(); }
  size_t index(int f, int c, int y, int x) const {
    return ((static_cast<size_t>(f) * channels + c) * height + y) * width + x;
  }
  T& at(int f, int c, int y, int x) { return data[index(f, c, y, x)]; }
  const T& at(int f, int c, int y, int x) const { return data[index(f, c, y, x)]; }

  template <typename U>
  bool same_shape(const VideoTensor<U>& o) const {
    return frames == o.frames && channels == o.channels && height == o.height && width == o.width;
  }
  std::string shape_string() const;

  template <typename U>
  VideoTensor<U> cast() const {
    VideoTensor<U> out(frames, channels, height, width);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const VideoTensor&) const = default;
};

struct PatchSize {
  int t = 1;
  int h = 4;
  int w = 4;

  int volume() const { return t * h * w; }
  bool operator==(const PatchSize&) const = default;
};

struct GridShape {
  int t = 0;
  int h = 0;
  int w = 0;

  int count() const { return t * h * w; }
  bool operator==(const GridShape&) const = default;
};

/// Throws ShapeError unless the video divides evenly into patches.
GridShape grid_shape(int frames, int height, int width, const PatchSize& patch);

/// Non-overlapping patches, one row per token in (t, y, x) raster order. Columns are laid out
/// channel-major: ((c * pt + dt) * ph + dy) * pw + dx.
template <typename T>
Matrix<T> patchify_raw(const VideoTensor<T>& video, const PatchSize& patch);

template <typename T>
VideoTensor<T> unpatchify(const Matrix<T>& tokens, const GridShape& grid, const PatchSize& patch,
                          int channels);

/// Channel order [noisy(3), render(3), mask(1)].
template <typename T>
VideoTensor<T> build_condition(const VideoTensor<T>& noisy, const VideoTensor<T>& render,
                               const VideoTensor<T>& mask);

template <typename T>
VideoTensor<T> to_tensor(const Video& video);
template <typename T>
VideoTensor<T> to_tensor(const MaskVideo& masks);
template <typename T>
Video to_video(const VideoTensor<T>& tensor);

}  // namespace trajcraft::diffusion
