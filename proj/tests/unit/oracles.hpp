#pragma once

// Independent reference implementations used as test oracles. None of these call into the
// code under test beyond plain data types.

#include <array>
#include <cstdint>
#include <vector>

#include "trajcraft/geometry.hpp"
#include "trajcraft/image.hpp"

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

/// Rodrigues' formula written out by hand.
Mat3 axis_angle(Vec3 axis, double radians);
Vec3 mul(const Mat3& r, const Vec3& v);
Mat3 mul(const Mat3& a, const Mat3& b);

struct Quat {
  double w, x, y, z;
};
Quat to_quat(const Mat3& r);
Mat3 to_mat(Quat q);
/// Shortest-arc slerp on unit quaternions.
Quat slerp(Quat a, Quat b, double s);

/// Plain pinhole projection: (fx x / z + cx, fy y / z + cy).
std::array<double, 2> project(const trajcraft::CameraIntrinsics& k, const Vec3& p);
Vec3 unproject(const trajcraft::CameraIntrinsics& k, double u, double v, double depth);

struct SplatPoint {
  Vec3 position;  // already in the target camera frame
  trajcraft::Rgb color;
};

struct BruteRender {
  trajcraft::ColorFrame color;
  trajcraft::MaskFrame mask;
  trajcraft::DepthFrame depth;
};

/// For every pixel, scans every point and keeps the nearest splat that covers it; ties go to
/// the earlier point. Quadratic, but obviously correct.
BruteRender brute_force_render(const std::vector<SplatPoint>& points,
                               const trajcraft::CameraIntrinsics& k, int radius,
                               double z_near = 1e-4);

/// SSIM computed window by window with an explicit 2D Gaussian, no separable filtering.
double ssim_direct(const trajcraft::ColorFrame& a, const trajcraft::ColorFrame& b, int window = 11,
                   double sigma = 1.5);

/// Deterministic pseudo-random frame with smooth content plus per-pixel noise.
trajcraft::ColorFrame random_frame(int width, int height, std::uint64_t seed, double noise = 0.05);

}  // namespace oracle
