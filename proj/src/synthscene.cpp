#include "trajcraft/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "trajcraft/errors.hpp"

namespace trajcraft {

namespace {

constexpr double kBackgroundHalfExtent = 1e6;

class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double sign() { return uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0; }
  Eigen::Vector3d color(double lo, double hi) {
    return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
  }
  Eigen::Vector2d unit2() {
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    return {std::cos(a), std::sin(a)};
  }

 private:
  std::mt19937_64 rng_;
};

LayerTexture random_texture(SceneRng& rng) {
  LayerTexture tex;
  tex.base = rng.color(0.25, 0.75);
  tex.gradient_x = rng.color(-0.25, 0.25);
  tex.gradient_y = rng.color(-0.25, 0.25);
  tex.stripe_dir = rng.unit2();
  tex.stripe_wavelength = rng.uniform(0.25, 0.45);
  tex.stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  tex.stripe_amplitude = rng.color(0.02, 0.07);
  return tex;
}

nlohmann::json v2(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
nlohmann::json v3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
Eigen::Vector2d v2(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Eigen::Vector3d v3(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

const char* motion_name(MotionKind k) {
  switch (k) {
    case MotionKind::linear: return "linear";
    case MotionKind::sinusoidal: return "sinusoidal";
    default: return "none";
  }
}

MotionKind motion_from_name(const std::string& s) {
  if (s == "linear") return MotionKind::linear;
  if (s == "sinusoidal") return MotionKind::sinusoidal;
  if (s == "none") return MotionKind::none;
  throw FormatError("scene.json: unknown motion kind \"" + s + "\"");
}

}  // namespace

Eigen::Vector2d LayerMotion::offset(double t) const {
  switch (kind) {
    case MotionKind::linear: return velocity * t;
    case MotionKind::sinusoidal:
      return amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
    default: return Eigen::Vector2d::Zero();
  }
}

Rgb LayerTexture::sample(const Eigen::Vector2d& a) const {
  const double stripe = std::sin(2.0 * std::numbers::pi * stripe_dir.dot(a) / stripe_wavelength +
                                 stripe_phase);
  const Eigen::Vector3d c =
      (base + gradient_x * a.x() + gradient_y * a.y() + stripe_amplitude * stripe)
          .cwiseMax(0.0)
          .cwiseMin(1.0);
  return {static_cast<float>(c.x()), static_cast<float>(c.y()), static_cast<float>(c.z())};
}

void SceneDescription::validate() const {
  if (layers.empty() || !layers.back().background) {
    throw ValidationError("scene: the last layer must be the background");
  }
  if (duration < 1 || width < 1 || height < 1) throw ValidationError("scene: bad dimensions");
  // Depths are affine in t, so pairwise gaps are extremal at the clip ends.
  const double ends[2] = {0.0, static_cast<double>(duration - 1)};
  for (double t : ends) {
    for (size_t i = 0; i < layers.size(); ++i) {
      if (!(layers[i].depth_at(t) > kMinLayerDepth)) {
        throw ValidationError("scene: layer " + std::to_string(i) + " is too close at t=" +
                              std::to_string(t));
      }
      for (size_t j = i + 1; j < layers.size(); ++j) {
        if (std::abs(layers[i].depth_at(t) - layers[j].depth_at(t)) < kMinLayerSeparation) {
          throw ValidationError("scene: layers " + std::to_string(i) + " and " + std::to_string(j) +
                                " are closer than the minimum separation");
        }
      }
    }
  }
  for (size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].background) throw ValidationError("scene: only the last layer may be background");
  }
}

SceneDescription make_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.n_layers < 1) throw ValidationError("make_scene: n_layers must be >= 1");
  if (config.n < 1) throw ValidationError("make_scene: n must be >= 1");
  if (config.width < 1 || config.height < 1) throw ValidationError("make_scene: bad resolution");
  if (!(config.min_depth > kMinLayerDepth) || !(config.max_depth > config.min_depth)) {
    throw ValidationError("make_scene: need 0.2 < min_depth < max_depth");
  }

  SceneRng rng(seed);
  SceneDescription scene;
  scene.seed = seed;
  scene.duration = config.n;
  scene.width = config.width;
  scene.height = config.height;

  const double bg_depth = config.max_depth * rng.uniform(0.9, 1.0);
  const int n_fg = config.n_layers - 1;
  if (n_fg > 0) {
    // Each foreground layer lives in its own depth slot: centered in the middle 40% and drifting
    // at most 10% of the slot, which leaves >= 40% of a slot between neighbours.
    const double span = bg_depth - config.min_depth;
    const double slot = span / n_fg;
    if (0.4 * slot < kMinLayerSeparation) {
      throw ValidationError("make_scene: cannot separate " + std::to_string(config.n_layers) +
                            " layers by 0.05 within [" + std::to_string(config.min_depth) + ", " +
                            std::to_string(config.max_depth) + "]");
    }
    const double max_drift = config.static_scene ? 0.0 : 0.1 * slot;
    for (int i = 0; i < n_fg; ++i) {
      SceneLayer layer;
      const double start = config.min_depth + slot * i;
      const double mid = start + slot * rng.uniform(0.3, 0.7);
      const double drift = rng.uniform(-max_drift, max_drift);
      const double frames = std::max(1, config.n - 1);
      layer.depth0 = mid - drift / 2.0;
      layer.depth_rate = drift / frames;

      // Footprint and motion are drawn in angular units and scaled by depth.
      const Eigen::Vector2d center_a(rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2));
      const Eigen::Vector2d half_a(rng.uniform(0.12, 0.28), rng.uniform(0.12, 0.28));
      layer.center = center_a * layer.depth0;
      layer.half_extent = half_a * layer.depth0;
      const double motion_pick = config.static_scene ? 0.0 : rng.uniform(0.0, 1.0);
      if (motion_pick > 2.0 / 3.0) {
        layer.motion.kind = MotionKind::sinusoidal;
        layer.motion.amplitude = Eigen::Vector2d(rng.uniform(-0.08, 0.08), rng.uniform(-0.05, 0.05)) *
                                 layer.depth0;
        layer.motion.period = rng.uniform(8.0, 24.0);
        layer.motion.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      } else if (motion_pick > 1.0 / 3.0) {
        layer.motion.kind = MotionKind::linear;
        layer.motion.velocity = rng.unit2() * rng.uniform(0.002, 0.01) * layer.depth0;
      }
      layer.texture = random_texture(rng);
      scene.layers.push_back(layer);
    }
  }

  SceneLayer bg;
  bg.background = true;
  bg.depth0 = bg_depth;
  bg.half_extent = Eigen::Vector2d::Constant(kBackgroundHalfExtent);
  bg.texture = random_texture(rng);
  scene.layers.push_back(bg);

  scene.validate();
  return scene;
}

std::pair<ColorFrame, DepthFrame> render_scene(const SceneDescription& scene, const PoseSE3& pose,
                                               const CameraIntrinsics& k, int t) {
  if (t < 0 || t >= scene.duration) {
    throw ValidationError("render_scene: frame " + std::to_string(t) + " outside [0, " +
                          std::to_string(scene.duration) + ")");
  }
  // Camera center and ray directions expressed in the frame-0 (world) camera.
  const Eigen::Matrix3d rt = pose.rotation.transpose();
  const Eigen::Vector3d origin = -(rt * pose.translation);

  struct LayerAt {
    double depth;
    Eigen::Vector2d center;
    const SceneLayer* layer;
  };
  std::vector<LayerAt> at;
  at.reserve(scene.layers.size());
  for (const auto& l : scene.layers) at.push_back({l.depth_at(t), l.center_at(t), &l});

  ColorFrame color(k.width, k.height);
  DepthFrame depth(k.width, k.height, 0.0f);
  for (int row = 0; row < k.height; ++row) {
    for (int col = 0; col < k.width; ++col) {
      // Camera-space ray with unit z, so the ray parameter is the camera depth.
      const Eigen::Vector3d dir_cam((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d dir = rt * dir_cam;
      if (std::abs(dir.z()) < 1e-12) continue;
      double best = std::numeric_limits<double>::infinity();
      Rgb best_color;
      for (const LayerAt& l : at) {
        const double s = (l.depth - origin.z()) / dir.z();
        if (!(s > kDefaultZNear) || s >= best) continue;
        const Eigen::Vector2d hit = (origin + s * dir).head<2>() - l.center;
        if (std::abs(hit.x()) > l.layer->half_extent.x() ||
            std::abs(hit.y()) > l.layer->half_extent.y()) {
          continue;
        }
        best = s;
        best_color = l.layer->texture.sample(hit / l.layer->depth0);
      }
      if (std::isfinite(best)) {
        color.at(row, col) = best_color;
        depth.at(row, col) = static_cast<float>(best);
      }
    }
  }
  return {std::move(color), std::move(depth)};
}

Clip render_clip(const SceneDescription& scene) {
  Trajectory still;
  still.poses.assign(scene.duration, PoseSE3::identity());
  Clip clip = render_clip(scene, still);
  clip.camera_poses.reset();
  return clip;
}

Clip render_clip(const SceneDescription& scene, const Trajectory& camera_path) {
  if (camera_path.size() != static_cast<size_t>(scene.duration)) {
    throw ShapeError("camera path length does not match scene duration");
  }
  Clip clip;
  clip.intrinsics = scene.intrinsics();
  for (int t = 0; t < scene.duration; ++t) {
    auto [c, d] = render_scene(scene, camera_path[t], clip.intrinsics, t);
    clip.colors.push_back(std::move(c));
    clip.depths.push_back(std::move(d));
  }
  clip.camera_poses = camera_path;
  return clip;
}

nlohmann::json scene_to_json(const SceneDescription& scene) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : scene.layers) {
    const auto& m = l.motion;
    const auto& tx = l.texture;
    layers.push_back({
        {"depth0", l.depth0},
        {"depth_rate", l.depth_rate},
        {"center", v2(l.center)},
        {"half_extent", v2(l.half_extent)},
        {"background", l.background},
        {"motion",
         {{"kind", motion_name(m.kind)},
          {"velocity", v2(m.velocity)},
          {"amplitude", v2(m.amplitude)},
          {"period", m.period},
          {"phase", m.phase}}},
        {"texture",
         {{"base", v3(tx.base)},
          {"gradient_x", v3(tx.gradient_x)},
          {"gradient_y", v3(tx.gradient_y)},
          {"stripe_dir", v2(tx.stripe_dir)},
          {"stripe_wavelength", tx.stripe_wavelength},
          {"stripe_phase", tx.stripe_phase},
          {"stripe_amplitude", v3(tx.stripe_amplitude)}}},
    });
  }
  return {{"seed", scene.seed},   {"duration", scene.duration}, {"width", scene.width},
          {"height", scene.height}, {"layers", layers}};
}

SceneDescription scene_from_json(const nlohmann::json& j) {
  SceneDescription scene;
  try {
    scene.seed = j.at("seed").get<std::uint64_t>();
    scene.duration = j.at("duration").get<int>();
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    for (const auto& e : j.at("layers")) {
      SceneLayer l;
      l.depth0 = e.at("depth0").get<double>();
      l.depth_rate = e.at("depth_rate").get<double>();
      l.center = v2(e.at("center"));
      l.half_extent = v2(e.at("half_extent"));
      l.background = e.at("background").get<bool>();
      const auto& m = e.at("motion");
      l.motion.kind = motion_from_name(m.at("kind").get<std::string>());
      l.motion.velocity = v2(m.at("velocity"));
      l.motion.amplitude = v2(m.at("amplitude"));
      l.motion.period = m.at("period").get<double>();
      l.motion.phase = m.at("phase").get<double>();
      const auto& tx = e.at("texture");
      l.texture.base = v3(tx.at("base"));
      l.texture.gradient_x = v3(tx.at("gradient_x"));
      l.texture.gradient_y = v3(tx.at("gradient_y"));
      l.texture.stripe_dir = v2(tx.at("stripe_dir"));
      l.texture.stripe_wavelength = tx.at("stripe_wavelength").get<double>();
      l.texture.stripe_phase = tx.at("stripe_phase").get<double>();
      l.texture.stripe_amplitude = v3(tx.at("stripe_amplitude"));
      scene.layers.push_back(l);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene.json: ") + e.what());
  }
  scene.validate();
  return scene;
}

}  // namespace trajcraft
