#pragma once

#include <vector>

#include "trajcraft/geometry.hpp"
#include "trajcraft/trajectory.hpp"

namespace trajcraft {

/// Novel-view render. Uncovered pixels have black color, mask 0 and depth 0.
struct RenderOutput {
  ColorFrame color;
  MaskFrame mask;
  DepthFrame depth;
};

/// Points whose depths differ by less than this are considered tied; the lower index wins.
inline constexpr double kDepthTieEpsilon = 1e-9;

/// Z-buffered square splats of side 2r+1 at the nearest pixel of each projected point.
RenderOutput render_frame(const PointCloudFrame& frame, const PoseSE3& pose,
                          const CameraIntrinsics& k, int splat_radius = 0,
                          double z_near = kDefaultZNear);

std::vector<RenderOutput> render_trajectory(const DynamicPointCloud& cloud, const Trajectory& traj,
                                            const CameraIntrinsics& k, int splat_radius = 0);

}  // namespace trajcraft
