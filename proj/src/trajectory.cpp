#include "trajcraft/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "trajcraft/errors.hpp"

namespace trajcraft {

namespace {

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

double frame_fraction(int i, int n) {
  return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
}

Eigen::Vector3d unit_axis(const Eigen::Vector3d& axis, const char* what) {
  const double len = axis.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw ValidationError(std::string(what) + ": rotation axis must be a nonzero finite vector");
  }
  return axis / len;
}

void validate_keys(const std::vector<Keyframe>& keys, int n) {
  if (keys.empty()) throw ValidationError("keyframes: at least one key is required");
  for (size_t i = 1; i < keys.size(); ++i) {
    if (keys[i].index == keys[i - 1].index) {
      throw ValidationError("keyframes: duplicate index " + std::to_string(keys[i].index));
    }
    if (keys[i].index < keys[i - 1].index) {
      throw ValidationError("keyframes: indices must be strictly increasing");
    }
  }
  if (keys.front().index != 0) throw ValidationError("keyframes: first key must be frame 0");
  if (keys.back().index != n - 1) {
    throw ValidationError("keyframes: last key must be frame " + std::to_string(n - 1));
  }
  for (const Keyframe& k : keys) k.pose.validate();
}

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(std::string(what) + " must be an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ValidationError(std::string(what) + " must contain numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

nlohmann::json vec3_to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

void Trajectory::validate() const {
  for (size_t i = 0; i < poses.size(); ++i) {
    if (!poses[i].is_valid()) {
      throw ValidationError("trajectory pose " + std::to_string(i) + " is not a rigid transform");
    }
  }
}

Trajectory generate(const TrajectorySpec& spec, int n) {
  if (n < 1) throw ValidationError("trajectory length must be at least 1");
  Trajectory traj;
  traj.poses.reserve(n);

  if (const auto* orbit = std::get_if<OrbitParams>(&spec)) {
    if (!orbit->pivot_depth) throw ValidationError("orbit: pivot_depth is unresolved");
    if (!(*orbit->pivot_depth > 0.0)) throw ValidationError("orbit: pivot_depth must be positive");
    const Eigen::Vector3d axis = unit_axis(orbit->axis, "orbit");
    const Eigen::Vector3d pivot(0.0, 0.0, *orbit->pivot_depth);
    for (int i = 0; i < n; ++i) {
      const double angle = radians(orbit->total_degrees) * frame_fraction(i, n);
      PoseSE3 p = PoseSE3::from_axis_angle(axis, angle);
      // Keeps the pivot fixed: p' = R (p - c) + c.
      p.translation = pivot - p.rotation * pivot;
      traj.poses.push_back(p);
    }
  } else if (const auto* dolly = std::get_if<DollyParams>(&spec)) {
    if (!dolly->displacement.allFinite()) throw ValidationError("dolly: displacement not finite");
    for (int i = 0; i < n; ++i) {
      PoseSE3 p;
      p.translation = dolly->displacement * frame_fraction(i, n);
      traj.poses.push_back(p);
    }
  } else if (const auto* pan = std::get_if<PanParams>(&spec)) {
    const Eigen::Vector3d axis = unit_axis(pan->axis, "pan");
    for (int i = 0; i < n; ++i) {
      traj.poses.push_back(
          PoseSE3::from_axis_angle(axis, radians(pan->sweep_degrees) * frame_fraction(i, n)));
    }
  } else {
    return interpolate_keyframes(std::get<KeyframeParams>(spec).keys, n);
  }
  return traj;
}

Trajectory interpolate_keyframes(const std::vector<Keyframe>& keys, int n) {
  if (n < 1) throw ValidationError("trajectory length must be at least 1");
  validate_keys(keys, n);

  Trajectory traj;
  traj.poses.resize(n);
  for (size_t k = 0; k < keys.size(); ++k) traj.poses[keys[k].index] = keys[k].pose;

  for (size_t k = 0; k + 1 < keys.size(); ++k) {
    const Keyframe& a = keys[k];
    const Keyframe& b = keys[k + 1];
    const Eigen::Quaterniond qa(a.pose.rotation);
    const Eigen::Quaterniond qb(b.pose.rotation);
    for (int i = a.index + 1; i < b.index; ++i) {
      const double s = static_cast<double>(i - a.index) / static_cast<double>(b.index - a.index);
      PoseSE3& p = traj.poses[i];
      // Eigen's slerp takes the shorter arc between q and -q.
      p.rotation = qa.slerp(s, qb).normalized().toRotationMatrix();
      p.translation = (1.0 - s) * a.pose.translation + s * b.pose.translation;
    }
  }
  return traj;
}

PoseSE3 sample_transform(std::uint64_t seed, const TransformRanges& ranges) {
  if (!(ranges.max_rotation_degrees >= 0.0) || !(ranges.max_translation.array() >= 0.0).all()) {
    throw ValidationError("sample_transform: ranges must be non-negative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (axis.norm() < 1e-12);
  const double angle = radians(ranges.max_rotation_degrees) * unit(rng);
  Eigen::Vector3d translation;
  for (int i = 0; i < 3; ++i) translation[i] = ranges.max_translation[i] * unit(rng);
  return PoseSE3::from_axis_angle(axis, angle, translation);
}

TransformRanges default_curation_ranges(double median_scene_depth) {
  TransformRanges r;
  r.max_rotation_degrees = 15.0;
  r.max_translation = Eigen::Vector3d::Constant(0.15 * median_scene_depth);
  return r;
}

nlohmann::json pose_to_json(const PoseSE3& pose) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation(i, j));
  }
  return {{"r", r}, {"t", vec3_to_json(pose.translation)}};
}

PoseSE3 pose_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("r") || !j.contains("t")) {
    throw ValidationError("pose must be an object with \"r\" and \"t\"");
  }
  const auto& r = j.at("r");
  if (!r.is_array() || r.size() != 9) throw ValidationError("pose \"r\" must hold 9 numbers");
  PoseSE3 pose;
  for (int i = 0; i < 9; ++i) {
    if (!r[i].is_number()) throw ValidationError("pose \"r\" must hold numbers");
    pose.rotation(i / 3, i % 3) = r[i].get<double>();
  }
  pose.translation = vec3_from_json(j.at("t"), "pose \"t\"");
  pose.validate();
  return pose;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : traj.poses) poses.push_back(pose_to_json(p));
  return {{"n", traj.poses.size()}, {"poses", poses}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("poses") || !j.at("n").is_number_integer() ||
      !j.at("poses").is_array()) {
    throw ValidationError("trajectory must be {\"n\": int, \"poses\": [...]}");
  }
  const auto n = j.at("n").get<long long>();
  if (n < 1 || static_cast<size_t>(n) != j.at("poses").size()) {
    throw ValidationError("trajectory \"n\" does not match the number of poses");
  }
  Trajectory traj;
  for (const auto& p : j.at("poses")) traj.poses.push_back(pose_from_json(p));
  return traj;
}

nlohmann::json spec_to_json(const TrajectorySpec& spec) {
  nlohmann::json params;
  std::string kind;
  if (const auto* o = std::get_if<OrbitParams>(&spec)) {
    kind = "orbit";
    params = {{"axis", vec3_to_json(o->axis)}, {"total_degrees", o->total_degrees}};
    if (o->pivot_depth) params["pivot_depth"] = *o->pivot_depth;
  } else if (const auto* d = std::get_if<DollyParams>(&spec)) {
    kind = "dolly";
    params = {{"displacement", vec3_to_json(d->displacement)}};
  } else if (const auto* p = std::get_if<PanParams>(&spec)) {
    kind = "pan";
    params = {{"axis", vec3_to_json(p->axis)}, {"sweep_degrees", p->sweep_degrees}};
  } else {
    kind = "keyframes";
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& k : std::get<KeyframeParams>(spec).keys) {
      nlohmann::json e = pose_to_json(k.pose);
      e["index"] = k.index;
      keys.push_back(e);
    }
    params = {{"keys", keys}};
  }
  return {{"kind", kind}, {"params", params}};
}

TrajectorySpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ValidationError("trajectory spec needs a string \"kind\"");
  }
  const std::string kind = j.at("kind").get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto number = [&](const char* key) {
    if (!params.contains(key) || !params.at(key).is_number()) {
      throw ValidationError(kind + ": missing numeric \"" + key + "\"");
    }
    return params.at(key).get<double>();
  };

  if (kind == "orbit") {
    OrbitParams o;
    if (params.contains("axis")) o.axis = vec3_from_json(params.at("axis"), "orbit axis");
    o.total_degrees = number("total_degrees");
    if (params.contains("pivot_depth")) o.pivot_depth = number("pivot_depth");
    return o;
  }
  if (kind == "dolly") {
    if (!params.contains("displacement")) throw ValidationError("dolly: missing \"displacement\"");
    return DollyParams{vec3_from_json(params.at("displacement"), "dolly displacement")};
  }
  if (kind == "pan") {
    PanParams p;
    if (params.contains("axis")) p.axis = vec3_from_json(params.at("axis"), "pan axis");
    p.sweep_degrees = number("sweep_degrees");
    return p;
  }
  if (kind == "keyframes") {
    if (!params.contains("keys") || !params.at("keys").is_array()) {
      throw ValidationError("keyframes: missing \"keys\" array");
    }
    KeyframeParams kp;
    for (const auto& e : params.at("keys")) {
      if (!e.contains("index") || !e.at("index").is_number_integer()) {
        throw ValidationError("keyframes: every key needs an integer \"index\"");
      }
      kp.keys.push_back({e.at("index").get<int>(), pose_from_json(e)});
    }
    return kp;
  }
  throw ValidationError("unknown trajectory kind \"" + kind + "\"");
}

}  // namespace trajcraft
