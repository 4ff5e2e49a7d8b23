#include "trajcraft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajcraft/errors.hpp"

namespace trajcraft {

namespace {

struct SquaredError {
  double sum = 0.0;
  size_t count = 0;
};

void accumulate(const ColorFrame& a, const ColorFrame& b, const MaskFrame* mask, SquaredError& acc) {
  require_same_shape(a, b, "psnr");
  if (mask) require_same_shape(a, *mask, "psnr mask");
  const auto pa = a.values();
  const auto pb = b.values();
  for (size_t i = 0; i < pa.size(); ++i) {
    if (mask && mask->values()[i] == 0) continue;
    const double dr = static_cast<double>(pa[i].r) - pb[i].r;
    const double dg = static_cast<double>(pa[i].g) - pb[i].g;
    const double db = static_cast<double>(pa[i].b) - pb[i].b;
    acc.sum += dr * dr + dg * dg + db * db;
    acc.count += 3;
  }
}

double to_psnr(const SquaredError& acc) {
  if (acc.count == 0) throw ValidationError("psnr: degenerate mask selects no pixels");
  const double mse = acc.sum / static_cast<double>(acc.count);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

// Separable 'valid' filtering: out has (h - win + 1) x (w - win + 1) entries.
Grid<double> filter_valid(const Grid<double>& img, const std::vector<double>& kernel) {
  const int win = static_cast<int>(kernel.size());
  const int ow = img.width() - win + 1;
  const int oh = img.height() - win + 1;
  Grid<double> rows(ow, img.height());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int k = 0; k < win; ++k) s += kernel[k] * img.at(r, c + k);
      rows.at(r, c) = s;
    }
  }
  Grid<double> out(ow, oh);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int k = 0; k < win; ++k) s += kernel[k] * rows.at(r + k, c);
      out.at(r, c) = s;
    }
  }
  return out;
}

Grid<double> product(const Grid<double>& a, const Grid<double>& b) {
  Grid<double> out(a.width(), a.height());
  for (size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
  return out;
}

}  // namespace

double psnr(const ColorFrame& a, const ColorFrame& b, const MaskFrame* mask) {
  SquaredError acc;
  accumulate(a, b, mask, acc);
  return to_psnr(acc);
}

double psnr(const Video& a, const Video& b, const MaskVideo* mask) {
  if (a.size() != b.size() || (mask && mask->size() != a.size())) {
    throw ShapeError("psnr: frame counts differ");
  }
  SquaredError acc;
  for (size_t i = 0; i < a.size(); ++i) accumulate(a[i], b[i], mask ? &(*mask)[i] : nullptr, acc);
  return to_psnr(acc);
}

Grid<double> luma(const ColorFrame& frame) {
  Grid<double> out(frame.width(), frame.height());
  const auto px = frame.values();
  for (size_t i = 0; i < px.size(); ++i) {
    out.values()[i] = 0.299 * px[i].r + 0.587 * px[i].g + 0.114 * px[i].b;
  }
  return out;
}

double ssim(const ColorFrame& a, const ColorFrame& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (a.width() < params.window || a.height() < params.window) {
    throw ShapeError("ssim: frame " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " is smaller than the " + std::to_string(params.window) + "px window");
  }
  std::vector<double> kernel(params.window);
  const double mid = (params.window - 1) / 2.0;
  double norm = 0.0;
  for (int i = 0; i < params.window; ++i) {
    kernel[i] = std::exp(-((i - mid) * (i - mid)) / (2.0 * params.sigma * params.sigma));
    norm += kernel[i];
  }
  for (double& k : kernel) k /= norm;

  const Grid<double> x = luma(a);
  const Grid<double> y = luma(b);
  const Grid<double> mx = filter_valid(x, kernel);
  const Grid<double> my = filter_valid(y, kernel);
  const Grid<double> sxx = filter_valid(product(x, x), kernel);
  const Grid<double> syy = filter_valid(product(y, y), kernel);
  const Grid<double> sxy = filter_valid(product(x, y), kernel);

  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
  double total = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double ux = mx.values()[i];
    const double uy = my.values()[i];
    const double vx = sxx.values()[i] - ux * ux;
    const double vy = syy.values()[i] - uy * uy;
    const double cxy = sxy.values()[i] - ux * uy;
    total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) /
             ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

nlohmann::json VideoReport::to_json() const {
  return {{"psnr", psnr}, {"ssim_mean", ssim_mean}, {"coverage", coverage}};
}

VideoReport video_report(const Video& pred, const Video& gt, const MaskVideo* mask) {
  if (pred.size() != gt.size() || (mask && mask->size() != pred.size())) {
    throw ShapeError("video_report: frame counts differ");
  }
  if (pred.empty()) throw ShapeError("video_report: empty video");
  VideoReport report;
  double psnr_sum = 0.0;
  int psnr_frames = 0;
  double ssim_sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const MaskFrame* m = mask ? &(*mask)[i] : nullptr;
    if (!m || coverage(*m) > 0.0) {
      psnr_sum += psnr(pred[i], gt[i], m);
      ++psnr_frames;
    }
    ssim_sum += ssim(pred[i], gt[i]);
  }
  if (psnr_frames == 0) throw ValidationError("video_report: every mask frame is empty");
  report.psnr = psnr_sum / psnr_frames;
  report.ssim_mean = ssim_sum / static_cast<double>(pred.size());
  report.coverage = mask ? coverage(*mask) : 1.0;
  return report;
}

}  // namespace trajcraft
