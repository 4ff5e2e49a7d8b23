#include "trajcraft/curation.hpp"

#include <cstdio>
#include <random>
#include <string>

#include "trajcraft/errors.hpp"

namespace trajcraft {

namespace {

std::string item_name(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "item_%06zu", index);
  return buf;
}

void require_video_shapes(const Video& a, const MaskVideo& m, const Video& b, const char* what) {
  if (a.size() != b.size() || a.size() != m.size()) {
    throw ShapeError(std::string(what) + ": frame counts differ");
  }
  for (size_t i = 0; i < a.size(); ++i) {
    require_same_shape(a[i], b[i], what);
    require_same_shape(a[i], m[i], what);
  }
}

}  // namespace

Reprojection double_reproject(const Video& target, const DepthVideo& depths,
                              const CameraIntrinsics& k, const PoseSE3& delta, int splat_radius) {
  if (target.size() != depths.size()) {
    throw ShapeError("double_reproject: target and depth frame counts differ");
  }
  delta.validate();
  const PoseSE3 back = invert(delta);
  Reprojection out;
  out.color.reserve(target.size());
  out.mask.reserve(target.size());
  for (size_t i = 0; i < target.size(); ++i) {
    const PointCloudFrame cloud = lift_frame(target[i], depths[i], k);
    const RenderOutput novel = render_frame(cloud, delta, k, splat_radius);
    const PointCloudFrame novel_cloud = lift_frame(novel.color, novel.depth, k);
    RenderOutput realigned = render_frame(novel_cloud, back, k, splat_radius);
    out.color.push_back(std::move(realigned.color));
    out.mask.push_back(std::move(realigned.mask));
  }
  return out;
}

TrainingPair make_monocular_pair(const Clip& clip, std::uint64_t seed,
                                 const TransformRanges& ranges, int splat_radius) {
  clip.validate();
  TrainingPair pair;
  pair.meta.seed = seed;
  pair.meta.delta = sample_transform(seed, ranges);
  pair.meta.intrinsics = clip.intrinsics;
  Reprojection r =
      double_reproject(clip.colors, clip.depths, clip.intrinsics, pair.meta.delta, splat_radius);
  pair.condition_color = std::move(r.color);
  pair.condition_mask = std::move(r.mask);
  pair.target_color = clip.colors;
  return pair;
}

TrainingPair make_monocular_pair(const fs::path& clip_dir, std::uint64_t seed,
                                 const TransformRanges& ranges, int splat_radius) {
  Clip clip;
  try {
    clip = read_clip(clip_dir);
  } catch (const ValidationError& e) {
    throw FormatError(clip_dir.string() + ": " + e.what());
  }
  return make_monocular_pair(clip, seed, ranges, splat_radius);
}

Trajectory relative_window_poses(const Trajectory& camera_poses, FrameWindow source,
                                 FrameWindow target) {
  Trajectory rel;
  for (int i = 0; i < target.length; ++i) {
    // Source camera -> capture frame 0 -> target camera.
    rel.poses.push_back(compose(camera_poses[target.start + i],
                                invert(camera_poses[source.start + i])));
  }
  return rel;
}

TrainingTriplet make_multiview_triplet(const Clip& clip, FrameWindow source, FrameWindow target,
                                       int splat_radius) {
  clip.validate();
  if (!clip.camera_poses) {
    throw ValidationError("make_multiview_triplet: clip has no camera poses");
  }
  const int n = static_cast<int>(clip.frame_count());
  for (const FrameWindow& w : {source, target}) {
    if (w.length < 1 || w.start < 0 || w.start + w.length > n) {
      throw ValidationError("make_multiview_triplet: window [" + std::to_string(w.start) + ", " +
                            std::to_string(w.start + w.length) + ") outside the clip");
    }
  }
  if (source.length != target.length) {
    throw ValidationError("make_multiview_triplet: source and target windows differ in length");
  }
  if (source.start + source.length <= target.start || target.start + target.length <= source.start) {
    throw OverlapError("source and target windows are disjoint");
  }

  const Trajectory rel = relative_window_poses(*clip.camera_poses, source, target);
  TrainingTriplet tri;
  for (int i = 0; i < target.length; ++i) {
    const int s = source.start + i;
    const PointCloudFrame cloud = lift_frame(clip.colors[s], clip.depths[s], clip.intrinsics);
    RenderOutput r = render_frame(cloud, rel[i], clip.intrinsics, splat_radius);
    tri.condition_color.push_back(std::move(r.color));
    tri.condition_mask.push_back(std::move(r.mask));
    tri.source_color.push_back(clip.colors[s]);
    tri.target_color.push_back(clip.colors[target.start + i]);
    tri.meta.source_poses.poses.push_back((*clip.camera_poses)[s]);
    tri.meta.target_poses.poses.push_back((*clip.camera_poses)[target.start + i]);
  }
  const double cov = coverage(tri.condition_mask);
  if (cov < kMinTripletCoverage) {
    throw OverlapError("condition coverage " + std::to_string(cov) + " is below " +
                       std::to_string(kMinTripletCoverage));
  }
  tri.meta.intrinsics = clip.intrinsics;
  tri.meta.source_start = source.start;
  tri.meta.target_start = target.start;
  return tri;
}

TrainingTriplet make_random_triplet(const Clip& clip, int length, std::uint64_t seed,
                                   int splat_radius, int max_attempts) {
  const int n = static_cast<int>(clip.frame_count());
  if (length < 1 || length >= n) {
    throw ValidationError("make_random_triplet: window length " + std::to_string(length) +
                          " needs a clip longer than " + std::to_string(n) + " frames");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(0, n - length);
  std::string last_error = "no attempts made";
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const int s = start(rng);
    const int t = start(rng);
    if (s == t || std::abs(s - t) >= length) continue;
    try {
      return make_multiview_triplet(clip, {s, length}, {t, length}, splat_radius);
    } catch (const OverlapError& e) {
      last_error = e.what();
    }
  }
  throw OverlapError("no overlapping window pair after " + std::to_string(max_attempts) +
                     " attempts (" + last_error + ")");
}

DatasetWriter::DatasetWriter(fs::path out_dir) : dir_(std::move(out_dir)) {
  fs::create_directories(dir_);
}

std::string DatasetWriter::append(const DatasetItem& item) {
  const std::string id = item_name(entries_.size());
  const fs::path dir = dir_ / id;
  nlohmann::json meta;
  nlohmann::json entry = {{"id", id}};
  if (const auto* pair = std::get_if<TrainingPair>(&item)) {
    require_video_shapes(pair->condition_color, pair->condition_mask, pair->target_color,
                         "training pair");
    write_video(pair->target_color, dir / "target");
    write_video(pair->condition_color, dir / "condition");
    write_masks(pair->condition_mask, dir / "mask");
    meta = {{"kind", "pair"},
            {"seed", pair->meta.seed},
            {"delta", pose_to_json(pair->meta.delta)},
            {"intrinsics", intrinsics_to_json(pair->meta.intrinsics)}};
    entry["kind"] = "pair";
    entry["seed"] = pair->meta.seed;
  } else {
    const auto& tri = std::get<TrainingTriplet>(item);
    require_video_shapes(tri.condition_color, tri.condition_mask, tri.target_color,
                         "training triplet");
    write_video(tri.target_color, dir / "target");
    write_video(tri.condition_color, dir / "condition");
    write_masks(tri.condition_mask, dir / "mask");
    write_video(tri.source_color, dir / "source");
    meta = {{"kind", "triplet"},
            {"source_poses", trajectory_to_json(tri.meta.source_poses)},
            {"target_poses", trajectory_to_json(tri.meta.target_poses)},
            {"source_start", tri.meta.source_start},
            {"target_start", tri.meta.target_start},
            {"intrinsics", intrinsics_to_json(tri.meta.intrinsics)}};
    entry["kind"] = "triplet";
    entry["seed"] = nullptr;
  }
  write_json(meta, dir / "meta.json");
  entries_.push_back(entry);
  return id;
}

nlohmann::json DatasetWriter::finish() {
  nlohmann::json manifest = {{"version", 1}, {"count", entries_.size()}, {"items", entries_}};
  write_json(manifest, dir_ / "manifest.json");
  return manifest;
}

nlohmann::json write_dataset(const std::vector<DatasetItem>& items, const fs::path& out_dir) {
  DatasetWriter writer(out_dir);
  for (const auto& item : items) writer.append(item);
  return writer.finish();
}

std::vector<DatasetItem> read_dataset(const fs::path& dir) {
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  std::vector<DatasetItem> items;
  try {
    const auto& entries = manifest.at("items");
    if (!entries.is_array() || manifest.at("count").get<size_t>() != entries.size()) {
      throw FormatError("manifest count does not match its item list");
    }
    for (const auto& e : entries) {
      const fs::path item_dir = dir / e.at("id").get<std::string>();
      const nlohmann::json meta = read_json(item_dir / "meta.json");
      const std::string kind = meta.at("kind").get<std::string>();
      if (kind != e.at("kind").get<std::string>()) {
        throw FormatError(item_dir.string() + ": kind disagrees with the manifest");
      }
      if (kind == "pair") {
        TrainingPair p;
        p.target_color = read_video(item_dir / "target");
        p.condition_color = read_video(item_dir / "condition");
        p.condition_mask = read_masks(item_dir / "mask");
        p.meta.seed = meta.at("seed").get<std::uint64_t>();
        p.meta.delta = pose_from_json(meta.at("delta"));
        p.meta.intrinsics = intrinsics_from_json(meta.at("intrinsics"));
        require_video_shapes(p.condition_color, p.condition_mask, p.target_color,
                             item_dir.string().c_str());
        items.emplace_back(std::move(p));
      } else if (kind == "triplet") {
        TrainingTriplet t;
        t.target_color = read_video(item_dir / "target");
        t.condition_color = read_video(item_dir / "condition");
        t.condition_mask = read_masks(item_dir / "mask");
        t.source_color = read_video(item_dir / "source");
        t.meta.source_poses = trajectory_from_json(meta.at("source_poses"));
        t.meta.target_poses = trajectory_from_json(meta.at("target_poses"));
        t.meta.source_start = meta.at("source_start").get<int>();
        t.meta.target_start = meta.at("target_start").get<int>();
        t.meta.intrinsics = intrinsics_from_json(meta.at("intrinsics"));
        require_video_shapes(t.condition_color, t.condition_mask, t.target_color,
                             item_dir.string().c_str());
        items.emplace_back(std::move(t));
      } else {
        throw FormatError(item_dir.string() + ": unknown item kind \"" + kind + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return items;
}

}  // namespace trajcraft
