#pragma once

#include "json.hpp"

#include "trajcraft/image.hpp"

namespace trajcraft {

/// Returned for identical inputs instead of +inf.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all channels of the selected pixels, capped at 99 dB.
double psnr(const ColorFrame& a, const ColorFrame& b, const MaskFrame* mask = nullptr);
/// Pools the squared error over every frame before taking the log.
double psnr(const Video& a, const Video& b, const MaskVideo* mask = nullptr);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Luma (0.299 R + 0.587 G + 0.114 B).
Grid<double> luma(const ColorFrame& frame);

/// Gaussian-windowed SSIM on luma, averaged over every full window position.
double ssim(const ColorFrame& a, const ColorFrame& b, const SsimParams& params = {});

struct VideoReport {
  double psnr = 0.0;
  double ssim_mean = 0.0;
  double coverage = 1.0;

  nlohmann::json to_json() const;
};

/// Per-frame metrics averaged over frames. With a mask, PSNR is masked and frames with an
/// empty mask are left out of the PSNR mean.
VideoReport video_report(const Video& pred, const Video& gt, const MaskVideo* mask = nullptr);

}  // namespace trajcraft
