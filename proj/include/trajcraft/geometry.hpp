#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <limits>
#include <vector>

#include "trajcraft/image.hpp"

namespace trajcraft {

/// Points at or closer than this (scene units, camera space) are treated as behind the camera.
inline constexpr double kDefaultZNear = 1e-4;

/// Pinhole calibration. Pixel (col u, row v) has its center at integer coordinates (u, v).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws ValidationError unless fx, fy > 0, the principal point lies inside the frame and
  /// the dimensions are positive.
  void validate() const;

  /// 60 degree horizontal field of view, principal point at the frame center.
  static CameraIntrinsics with_default_fov(int width, int height);

  Eigen::Matrix3d matrix() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Rigid transform taking source-camera coordinates to target-camera coordinates:
/// p' = rotation * p + translation. Camera axes: +x right, +y down, +z forward.
struct PoseSE3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                 const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  /// Orthonormal with determinant +1 to within `tol` (max-abs of R^T R - I).
  bool is_valid(double tol = 1e-6) const;
  void validate(double tol = 1e-6) const;

  /// Rotation angle in radians, in [0, pi].
  double rotation_angle() const;
};

/// compose(a, b) applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert(const PoseSE3& a);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

Eigen::Vector3d unproject_pixel(double u, double v, double depth, const CameraIntrinsics& k);
Projection project_point(const Eigen::Vector3d& p, const CameraIntrinsics& k,
                         double z_near = kDefaultZNear);

struct PixelIndex {
  int row = 0;
  int col = 0;

  bool operator==(const PixelIndex&) const = default;
};

struct CloudPoint {
  Eigen::Vector3d position;
  Rgb color;
  PixelIndex src_pixel;
};

struct PointCloudFrame {
  std::vector<CloudPoint> points;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct DynamicPointCloud {
  std::vector<PointCloudFrame> frames;
  CameraIntrinsics intrinsics;

  size_t frame_count() const { return frames.size(); }
};

/// Depth > 0 and finite.
inline bool is_valid_depth(float d) { return d > 0.0f && d <= std::numeric_limits<float>::max(); }

size_t count_valid_depth(const DepthFrame& depth);

/// Median of the valid depths in `depth`; 0 when none are valid.
double median_depth(const DepthFrame& depth);

PointCloudFrame lift_frame(const ColorFrame& color, const DepthFrame& depth,
                           const CameraIntrinsics& k);
DynamicPointCloud lift_video(const Video& colors, const DepthVideo& depths,
                             const CameraIntrinsics& k);

/// Rigidly moves every point; nothing is culled here.
PointCloudFrame transform_points(const PoseSE3& pose, const PointCloudFrame& frame);

}  // namespace trajcraft
