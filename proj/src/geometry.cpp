#include "trajcraft/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "trajcraft/errors.hpp"

namespace trajcraft {

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("intrinsics: width and height must be positive");
  }
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw ValidationError("intrinsics: focal lengths must be positive and finite");
  }
  if (!(cx >= 0.0 && cx <= width) || !(cy >= 0.0 && cy <= height)) {
    throw ValidationError("intrinsics: principal point outside the frame");
  }
}

CameraIntrinsics CameraIntrinsics::with_default_fov(int width, int height) {
  const double f = width / (2.0 * std::tan(std::numbers::pi / 6.0));
  CameraIntrinsics k{f, f, width / 2.0, height / 2.0, width, height};
  k.validate();
  return k;
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d m;
  m << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return m;
}

PoseSE3 PoseSE3::from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                 const Eigen::Vector3d& translation) {
  PoseSE3 p;
  const double n = axis.norm();
  if (n > 0.0 && radians != 0.0) {
    p.rotation = Eigen::AngleAxisd(radians, axis / n).toRotationMatrix();
  }
  p.translation = translation;
  return p;
}

bool PoseSE3::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  return ortho < tol && rotation.determinant() > 0.0;
}

void PoseSE3::validate(double tol) const {
  if (!is_valid(tol)) {
    throw ValidationError("pose rotation is not a proper orthonormal matrix");
  }
}

double PoseSE3::rotation_angle() const {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  PoseSE3 out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

PoseSE3 invert(const PoseSE3& a) {
  PoseSE3 out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

Eigen::Vector3d unproject_pixel(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw InvalidDepthError("depth " + std::to_string(depth) + " at pixel (" + std::to_string(u) +
                            ", " + std::to_string(v) + ")");
  }
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

Projection project_point(const Eigen::Vector3d& p, const CameraIntrinsics& k, double z_near) {
  if (!(p.z() > z_near)) {
    throw BehindCameraError("z = " + std::to_string(p.z()));
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

size_t count_valid_depth(const DepthFrame& depth) {
  return static_cast<size_t>(
      std::count_if(depth.values().begin(), depth.values().end(), is_valid_depth));
}

double median_depth(const DepthFrame& depth) {
  std::vector<float> valid;
  valid.reserve(depth.size());
  for (float d : depth.values()) {
    if (is_valid_depth(d)) valid.push_back(d);
  }
  if (valid.empty()) return 0.0;
  const auto mid = valid.begin() + static_cast<std::ptrdiff_t>(valid.size() / 2);
  std::nth_element(valid.begin(), mid, valid.end());
  return *mid;
}

PointCloudFrame lift_frame(const ColorFrame& color, const DepthFrame& depth,
                           const CameraIntrinsics& k) {
  require_same_shape(color, depth, "lift_frame color vs depth");
  if (color.width() != k.width || color.height() != k.height) {
    throw ShapeError("lift_frame frame is " + std::to_string(color.width()) + "x" +
                     std::to_string(color.height()) + " but intrinsics are " +
                     std::to_string(k.width) + "x" + std::to_string(k.height));
  }
  PointCloudFrame out;
  out.points.reserve(count_valid_depth(depth));
  for (int row = 0; row < depth.height(); ++row) {
    for (int col = 0; col < depth.width(); ++col) {
      const float d = depth.at(row, col);
      if (!is_valid_depth(d)) continue;
      out.points.push_back({unproject_pixel(col, row, d, k), color.at(row, col), {row, col}});
    }
  }
  return out;
}

DynamicPointCloud lift_video(const Video& colors, const DepthVideo& depths,
                             const CameraIntrinsics& k) {
  if (colors.size() != depths.size()) {
    throw ShapeError("lift_video got " + std::to_string(colors.size()) + " color frames and " +
                     std::to_string(depths.size()) + " depth frames");
  }
  if (colors.empty()) throw ShapeError("lift_video needs at least one frame");
  DynamicPointCloud cloud;
  cloud.intrinsics = k;
  cloud.frames.reserve(colors.size());
  for (size_t i = 0; i < colors.size(); ++i) {
    cloud.frames.push_back(lift_frame(colors[i], depths[i], k));
  }
  return cloud;
}

PointCloudFrame transform_points(const PoseSE3& pose, const PointCloudFrame& frame) {
  PointCloudFrame out = frame;
  for (CloudPoint& p : out.points) p.position = pose.apply(p.position);
  return out;
}

}  // namespace trajcraft
