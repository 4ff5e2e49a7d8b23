#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "trajcraft/clip_io.hpp"
#include "trajcraft/renderer.hpp"
#include "trajcraft/trajectory.hpp"

namespace trajcraft {

struct PairMeta {
  std::uint64_t seed = 0;
  PoseSE3 delta;
  CameraIntrinsics intrinsics;
};

/// Hole-bearing condition aligned with its target video.
struct TrainingPair {
  Video condition_color;
  MaskVideo condition_mask;
  Video target_color;
  PairMeta meta;
};

struct TripletMeta {
  /// Camera poses (relative to the capture's frame 0) of the source and target windows.
  Trajectory source_poses;
  Trajectory target_poses;
  CameraIntrinsics intrinsics;
  int source_start = 0;
  int target_start = 0;
};

struct TrainingTriplet {
  Video source_color;
  Video condition_color;
  MaskVideo condition_mask;
  Video target_color;
  TripletMeta meta;
};

using DatasetItem = std::variant<TrainingPair, TrainingTriplet>;

struct Reprojection {
  Video color;
  MaskVideo mask;
};

/// Lift each target frame with its depth, render at `delta`, lift that render with its own
/// depth and render back at invert(delta). The result is aligned with the target and carries
/// the holes that a novel view would have.
Reprojection double_reproject(const Video& target, const DepthVideo& depths,
                              const CameraIntrinsics& k, const PoseSE3& delta,
                              int splat_radius = 0);

TrainingPair make_monocular_pair(const Clip& clip, std::uint64_t seed,
                                 const TransformRanges& ranges, int splat_radius = 0);
TrainingPair make_monocular_pair(const fs::path& clip_dir, std::uint64_t seed,
                                 const TransformRanges& ranges, int splat_radius = 0);

struct FrameWindow {
  int start = 0;
  int length = 0;
};

/// Minimum mean condition coverage for a source/target window pair to count as overlapping.
inline constexpr double kMinTripletCoverage = 0.2;

/// Frame i of the source window is lifted and rendered at the relative pose that carries the
/// source camera onto the camera of target frame i. Requires clip.camera_poses.
TrainingTriplet make_multiview_triplet(const Clip& clip, FrameWindow source, FrameWindow target,
                                       int splat_radius = 0);

/// Draws distinct, time-overlapping source/target windows of `length` frames from `seed` until
/// one passes the coverage test. Throws OverlapError after `max_attempts` failures.
TrainingTriplet make_random_triplet(const Clip& clip, int length, std::uint64_t seed,
                                   int splat_radius = 0, int max_attempts = 16);

/// Relative poses from each source-window camera to the matching target-window camera.
Trajectory relative_window_poses(const Trajectory& camera_poses, FrameWindow source,
                                 FrameWindow target);

/// Append-only dataset writer; the manifest is written by finish().
///   out/manifest.json
///   out/item_%06d/{target/, condition/, mask/, source/ (triplets), meta.json}
class DatasetWriter {
 public:
  explicit DatasetWriter(fs::path out_dir);

  std::string append(const DatasetItem& item);
  nlohmann::json finish();

 private:
  fs::path dir_;
  nlohmann::json entries_ = nlohmann::json::array();
};

nlohmann::json write_dataset(const std::vector<DatasetItem>& items, const fs::path& out_dir);
std::vector<DatasetItem> read_dataset(const fs::path& dir);

}  // namespace trajcraft
