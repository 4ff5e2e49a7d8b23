#include "trajcraft/diffusion/tensor.hpp"

#include <algorithm>

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

template <typename T>
std::string VideoTensor<T>::shape_string() const {
  return std::to_string(frames) + "x" + std::to_string(channels) + "x" + std::to_string(height) +
         "x" + std::to_string(width);
}

GridShape grid_shape(int frames, int height, int width, const PatchSize& patch) {
  if (patch.t < 1 || patch.h < 1 || patch.w < 1) throw ShapeError("patch sizes must be positive");
  if (frames < 1 || height < 1 || width < 1 || frames % patch.t || height % patch.h ||
      width % patch.w) {
    throw ShapeError("video " + std::to_string(frames) + "x" + std::to_string(height) + "x" +
                     std::to_string(width) + " is not divisible by patch (" +
                     std::to_string(patch.t) + "," + std::to_string(patch.h) + "," +
                     std::to_string(patch.w) + ")");
  }
  return {frames / patch.t, height / patch.h, width / patch.w};
}

template <typename T>
Matrix<T> patchify_raw(const VideoTensor<T>& video, const PatchSize& patch) {
  const GridShape g = grid_shape(video.frames, video.height, video.width, patch);
  const int cols = video.channels * patch.volume();
  Matrix<T> out(g.count(), cols);
  for (int gt = 0; gt < g.t; ++gt) {
    for (int gy = 0; gy < g.h; ++gy) {
      for (int gx = 0; gx < g.w; ++gx) {
        const int row = (gt * g.h + gy) * g.w + gx;
        int col = 0;
        for (int c = 0; c < video.channels; ++c) {
          for (int dt = 0; dt < patch.t; ++dt) {
            for (int dy = 0; dy < patch.h; ++dy) {
              for (int dx = 0; dx < patch.w; ++dx) {
                out(row, col++) =
                    video.at(gt * patch.t + dt, c, gy * patch.h + dy, gx * patch.w + dx);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
VideoTensor<T> unpatchify(const Matrix<T>& tokens, const GridShape& grid, const PatchSize& patch,
                          int channels) {
  if (tokens.rows() != grid.count() || tokens.cols() != channels * patch.volume()) {
    throw ShapeError("unpatchify: token matrix does not match grid and patch");
  }
  VideoTensor<T> out(grid.t * patch.t, channels, grid.h * patch.h, grid.w * patch.w);
  for (int gt = 0; gt < grid.t; ++gt) {
    for (int gy = 0; gy < grid.h; ++gy) {
      for (int gx = 0; gx < grid.w; ++gx) {
        const int row = (gt * grid.h + gy) * grid.w + gx;
        int col = 0;
        for (int c = 0; c < channels; ++c) {
          for (int dt = 0; dt < patch.t; ++dt) {
            for (int dy = 0; dy < patch.h; ++dy) {
              for (int dx = 0; dx < patch.w; ++dx) {
                out.at(gt * patch.t + dt, c, gy * patch.h + dy, gx * patch.w + dx) =
                    tokens(row, col++);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
VideoTensor<T> build_condition(const VideoTensor<T>& noisy, const VideoTensor<T>& render,
                               const VideoTensor<T>& mask) {
  if (noisy.channels != 3 || render.channels != 3 || mask.channels != 1) {
    throw ShapeError("build_condition expects 3 + 3 + 1 channels");
  }
  const auto same_grid = [&](const VideoTensor<T>& v) {
    return v.frames == noisy.frames && v.height == noisy.height && v.width == noisy.width;
  };
  if (!same_grid(render) || !same_grid(mask)) {
    throw ShapeError("build_condition: " + noisy.shape_string() + " vs " + render.shape_string() +
                     " vs " + mask.shape_string());
  }
  VideoTensor<T> out(noisy.frames, 7, noisy.height, noisy.width);
  const size_t plane = static_cast<size_t>(noisy.height) * noisy.width;
  for (int f = 0; f < noisy.frames; ++f) {
    auto dst = out.data.begin() + static_cast<std::ptrdiff_t>(out.index(f, 0, 0, 0));
    dst = std::copy_n(noisy.data.begin() + static_cast<std::ptrdiff_t>(noisy.index(f, 0, 0, 0)),
                      3 * plane, dst);
    dst = std::copy_n(render.data.begin() + static_cast<std::ptrdiff_t>(render.index(f, 0, 0, 0)),
                      3 * plane, dst);
    std::copy_n(mask.data.begin() + static_cast<std::ptrdiff_t>(mask.index(f, 0, 0, 0)), plane,
                dst);
  }
  return out;
}

template <typename T>
VideoTensor<T> to_tensor(const Video& video) {
  if (video.empty()) throw ShapeError("to_tensor: empty video");
  VideoTensor<T> out(static_cast<int>(video.size()), 3, video[0].height(), video[0].width());
  for (int f = 0; f < out.frames; ++f) {
    require_same_shape(video[f], video[0], "to_tensor");
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const Rgb& p = video[f].at(y, x);
        out.at(f, 0, y, x) = static_cast<T>(p.r);
        out.at(f, 1, y, x) = static_cast<T>(p.g);
        out.at(f, 2, y, x) = static_cast<T>(p.b);
      }
    }
  }
  return out;
}

template <typename T>
VideoTensor<T> to_tensor(const MaskVideo& masks) {
  if (masks.empty()) throw ShapeError("to_tensor: empty mask video");
  VideoTensor<T> out(static_cast<int>(masks.size()), 1, masks[0].height(), masks[0].width());
  for (int f = 0; f < out.frames; ++f) {
    require_same_shape(masks[f], masks[0], "to_tensor");
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) out.at(f, 0, y, x) = masks[f].at(y, x) ? T{1} : T{0};
    }
  }
  return out;
}

template <typename T>
Video to_video(const VideoTensor<T>& tensor) {
  if (tensor.channels != 3) throw ShapeError("to_video expects 3 channels");
  Video out;
  for (int f = 0; f < tensor.frames; ++f) {
    ColorFrame frame(tensor.width, tensor.height);
    for (int y = 0; y < tensor.height; ++y) {
      for (int x = 0; x < tensor.width; ++x) {
        frame.at(y, x) = {static_cast<float>(tensor.at(f, 0, y, x)),
                          static_cast<float>(tensor.at(f, 1, y, x)),
                          static_cast<float>(tensor.at(f, 2, y, x))};
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

#define TRAJCRAFT_INSTANTIATE(T)                                                             \
  template struct VideoTensor<T>;                                                            \
  template Matrix<T> patchify_raw(const VideoTensor<T>&, const PatchSize&);                  \
  template VideoTensor<T> unpatchify(const Matrix<T>&, const GridShape&, const PatchSize&, int); \
  template VideoTensor<T> build_condition(const VideoTensor<T>&, const VideoTensor<T>&,      \
                                          const VideoTensor<T>&);                            \
  template VideoTensor<T> to_tensor<T>(const Video&);                                        \
  template VideoTensor<T> to_tensor<T>(const MaskVideo&);                                    \
  template Video to_video(const VideoTensor<T>&);

TRAJCRAFT_INSTANTIATE(float)
TRAJCRAFT_INSTANTIATE(double)
#undef TRAJCRAFT_INSTANTIATE

}  // namespace trajcraft::diffusion
