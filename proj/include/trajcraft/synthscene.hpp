#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

#include "trajcraft/clip_io.hpp"
#include "trajcraft/geometry.hpp"

namespace trajcraft {

enum class MotionKind { none, linear, sinusoidal };

/// In-plane motion of a layer center, in scene units.
struct LayerMotion {
  MotionKind kind = MotionKind::none;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();   // per frame (linear)
  Eigen::Vector2d amplitude = Eigen::Vector2d::Zero();  // sinusoidal
  double period = 1.0;                                  // frames (sinusoidal)
  double phase = 0.0;

  Eigen::Vector2d offset(double t) const;
};

/// Band-limited color field over angular plane coordinates a = local_xy / depth0:
/// base + gradient * a + stripe_amplitude * sin(2 pi (stripe_dir . a) / stripe_wavelength + phase).
struct LayerTexture {
  Eigen::Vector3d base = Eigen::Vector3d::Constant(0.5);
  Eigen::Vector3d gradient_x = Eigen::Vector3d::Zero();
  Eigen::Vector3d gradient_y = Eigen::Vector3d::Zero();
  Eigen::Vector2d stripe_dir = Eigen::Vector2d::UnitX();
  double stripe_wavelength = 1.0;
  double stripe_phase = 0.0;
  Eigen::Vector3d stripe_amplitude = Eigen::Vector3d::Zero();

  Rgb sample(const Eigen::Vector2d& angular) const;
};

/// Fronto-parallel textured rectangle at depth depth0 + depth_rate * t in the frame-0 camera.
struct SceneLayer {
  double depth0 = 1.0;
  double depth_rate = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  /// Half sizes in scene units; the background uses a very large extent.
  Eigen::Vector2d half_extent = Eigen::Vector2d::Ones();
  LayerMotion motion;
  LayerTexture texture;
  bool background = false;

  double depth_at(double t) const { return depth0 + depth_rate * t; }
  Eigen::Vector2d center_at(double t) const { return center + motion.offset(t); }
};

/// Layers are ordered near to far; the last one is the full-frame background.
struct SceneDescription {
  std::vector<SceneLayer> layers;
  std::uint64_t seed = 0;
  int duration = 1;
  int width = 64;
  int height = 64;

  CameraIntrinsics intrinsics() const { return CameraIntrinsics::with_default_fov(width, height); }
  /// Throws ValidationError on depth separation < 0.05, depth <= 0.2 or a missing background.
  void validate() const;
};

inline constexpr double kMinLayerSeparation = 0.05;
inline constexpr double kMinLayerDepth = 0.2;

struct SceneConfig {
  int n_layers = 3;
  int n = 8;
  int width = 64;
  int height = 64;
  double min_depth = 1.5;
  double max_depth = 6.0;
  /// No in-plane motion or depth drift; used for multi-view captures.
  bool static_scene = false;
};

SceneDescription make_scene(std::uint64_t seed, const SceneConfig& config);

/// Analytic ray-plane render. Pixels that hit nothing get black color and depth 0.
std::pair<ColorFrame, DepthFrame> render_scene(const SceneDescription& scene, const PoseSE3& pose,
                                               const CameraIntrinsics& k, int t);

/// Renders every frame from the source camera (monocular clip).
Clip render_clip(const SceneDescription& scene);
/// Renders frame i from camera pose camera_path[i] (pose relative to frame 0); records poses.json.
Clip render_clip(const SceneDescription& scene, const Trajectory& camera_path);

nlohmann::json scene_to_json(const SceneDescription& scene);
SceneDescription scene_from_json(const nlohmann::json& j);

}  // namespace trajcraft
