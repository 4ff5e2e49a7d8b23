#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "trajcraft/geometry.hpp"

namespace trajcraft {

/// Per-frame relative transforms from the source camera to the target camera.
struct Trajectory {
  std::vector<PoseSE3> poses;

  size_t size() const { return poses.size(); }
  const PoseSE3& operator[](size_t i) const { return poses[i]; }

  void validate() const;
};

/// Rotation about a pivot on the source optical axis at `pivot_depth`.
struct OrbitParams {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double total_degrees = 0.0;
  /// Unset means "use the median source depth of frame 0", resolved by the caller.
  std::optional<double> pivot_depth;
};

struct DollyParams {
  Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
};

/// Rotation about the camera center.
struct PanParams {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double sweep_degrees = 0.0;
};

struct Keyframe {
  int index = 0;
  PoseSE3 pose;
};

struct KeyframeParams {
  std::vector<Keyframe> keys;
};

using TrajectorySpec = std::variant<OrbitParams, DollyParams, PanParams, KeyframeParams>;

Trajectory generate(const TrajectorySpec& spec, int n);

/// Quaternion slerp (shortest arc) for rotation, linear blend for translation. Key poses are
/// reproduced exactly at their own indices.
Trajectory interpolate_keyframes(const std::vector<Keyframe>& keys, int n);

struct TransformRanges {
  Eigen::Vector3d max_translation = Eigen::Vector3d::Zero();
  double max_rotation_degrees = 0.0;
};

/// Uniform axis on the sphere, angle uniform in [-max, max], translation uniform per axis.
PoseSE3 sample_transform(std::uint64_t seed, const TransformRanges& ranges);

/// Curation defaults: 15 degrees, 0.15 x median scene depth on every axis.
TransformRanges default_curation_ranges(double median_scene_depth);

// JSON: pose {"r": [9 row-major], "t": [3]}; trajectory {"n": int, "poses": [...]};
// spec {"kind": "orbit"|"dolly"|"pan"|"keyframes", "params": {...}}.
nlohmann::json pose_to_json(const PoseSE3& pose);
PoseSE3 pose_from_json(const nlohmann::json& j);
nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const TrajectorySpec& spec);
TrajectorySpec spec_from_json(const nlohmann::json& j);

}  // namespace trajcraft
