#include "trajcraft/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trajcraft/errors.hpp"

namespace trajcraft {

RenderOutput render_frame(const PointCloudFrame& frame, const PoseSE3& pose,
                          const CameraIntrinsics& k, int splat_radius, double z_near) {
  if (splat_radius < 0) throw ValidationError("splat_radius must be non-negative");
  const int w = k.width;
  const int h = k.height;

  // Per-pixel winner: smallest depth, ties to the lower point index. Points are visited in
  // index order, so a later point only takes a pixel when it is strictly nearer.
  std::vector<double> zbuf(static_cast<size_t>(w) * h, std::numeric_limits<double>::infinity());
  std::vector<int> owner(zbuf.size(), -1);

  const int n = static_cast<int>(frame.points.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p = pose.apply(frame.points[i].position);
    if (!(p.z() > z_near)) continue;
    const Projection proj = project_point(p, k, z_near);
    if (!std::isfinite(proj.u) || !std::isfinite(proj.v)) continue;
    const double col_f = std::floor(proj.u + 0.5);
    const double row_f = std::floor(proj.v + 0.5);
    if (col_f + splat_radius < 0.0 || col_f - splat_radius > w - 1 ||
        row_f + splat_radius < 0.0 || row_f - splat_radius > h - 1) {
      continue;
    }
    const int col = static_cast<int>(col_f);
    const int row = static_cast<int>(row_f);
    const int r0 = std::max(0, row - splat_radius);
    const int r1 = std::min(h - 1, row + splat_radius);
    const int c0 = std::max(0, col - splat_radius);
    const int c1 = std::min(w - 1, col + splat_radius);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const size_t idx = static_cast<size_t>(r) * w + c;
        if (p.z() < zbuf[idx] - kDepthTieEpsilon) {
          zbuf[idx] = p.z();
          owner[idx] = i;
        }
      }
    }
  }

  RenderOutput out{ColorFrame(w, h), MaskFrame(w, h, 0), DepthFrame(w, h, 0.0f)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int i = owner[static_cast<size_t>(r) * w + c];
      if (i < 0) continue;
      out.color.at(r, c) = frame.points[i].color;
      out.mask.at(r, c) = 1;
      // Depths below float resolution still have to read back as valid.
      out.depth.at(r, c) = std::max(static_cast<float>(zbuf[static_cast<size_t>(r) * w + c]),
                                    std::numeric_limits<float>::min());
    }
  }
  return out;
}

std::vector<RenderOutput> render_trajectory(const DynamicPointCloud& cloud, const Trajectory& traj,
                                            const CameraIntrinsics& k, int splat_radius) {
  if (traj.size() != cloud.frame_count()) {
    throw ShapeError("trajectory has " + std::to_string(traj.size()) + " poses but the cloud has " +
                     std::to_string(cloud.frame_count()) + " frames");
  }
  std::vector<RenderOutput> out;
  out.reserve(traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    out.push_back(render_frame(cloud.frames[i], traj[i], k, splat_radius));
  }
  return out;
}

}  // namespace trajcraft
