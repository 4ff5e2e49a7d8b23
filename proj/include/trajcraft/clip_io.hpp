#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "trajcraft/geometry.hpp"
#include "trajcraft/trajectory.hpp"

namespace trajcraft {

namespace fs = std::filesystem;

/// An RGB-D clip on disk ("depth-raw v1"):
///   meta.json          {width, height, frame_count, units: "arbitrary"}
///   intrinsics.json    {fx, fy, cx, cy, width, height}
///   frame_%05d.png     8-bit RGB
///   frame_%05d.depth   height*width little-endian float32, row-major, no header
///   poses.json         optional trajectory: camera pose of frame i relative to frame 0
struct Clip {
  CameraIntrinsics intrinsics;
  Video colors;
  DepthVideo depths;
  std::optional<Trajectory> camera_poses;

  size_t frame_count() const { return colors.size(); }
  void validate() const;
};

std::string frame_name(int index, const char* prefix, const char* extension);

std::vector<std::uint8_t> encode_png(const ColorFrame& frame);
std::vector<std::uint8_t> encode_mask_png(const MaskFrame& mask);
ColorFrame decode_png(std::span<const std::uint8_t> bytes);

void write_png(const ColorFrame& frame, const fs::path& path);
ColorFrame read_png(const fs::path& path);
/// Masks are stored as 8-bit gray 0/255; reading thresholds at 128.
void write_mask_png(const MaskFrame& mask, const fs::path& path);
MaskFrame read_mask_png(const fs::path& path);

void write_depth_raw(const DepthFrame& depth, const fs::path& path);
DepthFrame read_depth_raw(const fs::path& path, int width, int height);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);
void write_json(const nlohmann::json& j, const fs::path& path);
void write_bytes(std::span<const std::uint8_t> bytes, const fs::path& path);

void write_clip(const Clip& clip, const fs::path& dir);
Clip read_clip(const fs::path& dir);

/// Writes frame_%05d.png for each frame.
void write_video(const Video& frames, const fs::path& dir);
/// Reads consecutive frame_%05d.png starting at 0 until one is missing.
Video read_video(const fs::path& dir);
void write_masks(const MaskVideo& masks, const fs::path& dir);
MaskVideo read_masks(const fs::path& dir);
void write_depths(const DepthVideo& depths, const fs::path& dir);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace trajcraft
