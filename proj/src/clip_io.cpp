#include "trajcraft/clip_io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "trajcraft/errors.hpp"

namespace trajcraft {

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
}

std::vector<std::uint8_t> encode_raw_png(const std::vector<std::uint8_t>& raw, int width,
                                         int height, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> decode_raw_png(std::span<const std::uint8_t> bytes, png_uint_32 format,
                                         int& width, int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode failed: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png decode failed: ") + image.message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return raw;
}

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

void Clip::validate() const {
  intrinsics.validate();
  if (colors.empty()) throw ShapeError("clip has no frames");
  if (colors.size() != depths.size()) throw ShapeError("clip color/depth frame counts differ");
  for (size_t i = 0; i < colors.size(); ++i) {
    if (colors[i].width() != intrinsics.width || colors[i].height() != intrinsics.height) {
      throw ShapeError("clip frame " + std::to_string(i) + " does not match the intrinsics");
    }
    require_same_shape(colors[i], depths[i], "clip frame " + std::to_string(i));
  }
  if (camera_poses && camera_poses->size() != colors.size()) {
    throw ShapeError("clip poses.json length does not match frame count");
  }
}

std::string frame_name(int index, const char* prefix, const char* extension) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.%s", prefix, index, extension);
  return buf;
}

std::vector<std::uint8_t> encode_png(const ColorFrame& frame) {
  std::vector<std::uint8_t> raw;
  raw.reserve(frame.size() * 3);
  for (const Rgb& p : frame.values()) {
    raw.push_back(quantize_unit(p.r));
    raw.push_back(quantize_unit(p.g));
    raw.push_back(quantize_unit(p.b));
  }
  return encode_raw_png(raw, frame.width(), frame.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_mask_png(const MaskFrame& mask) {
  std::vector<std::uint8_t> raw;
  raw.reserve(mask.size());
  for (std::uint8_t m : mask.values()) raw.push_back(m ? 255 : 0);
  return encode_raw_png(raw, mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

ColorFrame decode_png(std::span<const std::uint8_t> bytes) {
  int w = 0;
  int h = 0;
  const auto raw = decode_raw_png(bytes, PNG_FORMAT_RGB, w, h);
  ColorFrame frame(w, h);
  auto px = frame.values();
  for (size_t i = 0; i < px.size(); ++i) {
    px[i] = {dequantize_unit(raw[3 * i]), dequantize_unit(raw[3 * i + 1]),
             dequantize_unit(raw[3 * i + 2])};
  }
  return frame;
}

void write_bytes(std::span<const std::uint8_t> bytes, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_png(const ColorFrame& frame, const fs::path& path) {
  write_bytes(encode_png(frame), path);
}

ColorFrame read_png(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_mask_png(const MaskFrame& mask, const fs::path& path) {
  write_bytes(encode_mask_png(mask), path);
}

MaskFrame read_mask_png(const fs::path& path) {
  const auto bytes = read_file(path);
  int w = 0;
  int h = 0;
  const auto raw = decode_raw_png(bytes, PNG_FORMAT_GRAY, w, h);
  MaskFrame mask(w, h);
  auto px = mask.values();
  for (size_t i = 0; i < px.size(); ++i) px[i] = raw[i] >= 128 ? 1 : 0;
  return mask;
}

void write_depth_raw(const DepthFrame& depth, const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(depth.size() * 4);
  for (float d : depth.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(d);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  write_bytes(bytes, path);
}

DepthFrame read_depth_raw(const fs::path& path, int width, int height) {
  const auto bytes = read_file(path);
  const size_t expected = static_cast<size_t>(width) * height * 4;
  if (bytes.size() != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  DepthFrame depth(width, height);
  auto px = depth.values();
  for (size_t i = 0; i < px.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    const float d = std::bit_cast<float>(bits);
    // Non-finite or negative values read back as invalid pixels.
    px[i] = is_valid_depth(d) ? d : 0.0f;
  }
  return depth;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("intrinsics: ") + e.what());
  }
  k.validate();
  return k;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  const std::string text = j.dump(2) + "\n";
  write_bytes({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}, path);
}

void write_clip(const Clip& clip, const fs::path& dir) {
  clip.validate();
  fs::create_directories(dir);
  const auto& k = clip.intrinsics;
  write_json({{"width", k.width},
              {"height", k.height},
              {"frame_count", clip.frame_count()},
              {"units", "arbitrary"}},
             dir / "meta.json");
  write_json(intrinsics_to_json(k), dir / "intrinsics.json");
  for (size_t i = 0; i < clip.frame_count(); ++i) {
    write_png(clip.colors[i], dir / frame_name(static_cast<int>(i), "frame", "png"));
    write_depth_raw(clip.depths[i], dir / frame_name(static_cast<int>(i), "frame", "depth"));
  }
  if (clip.camera_poses) write_json(trajectory_to_json(*clip.camera_poses), dir / "poses.json");
}

Clip read_clip(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  const auto meta = read_json(dir / "meta.json");
  Clip clip;
  int width = 0;
  int height = 0;
  int count = 0;
  try {
    width = meta.at("width").get<int>();
    height = meta.at("height").get<int>();
    count = meta.at("frame_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir.string() + "/meta.json: " + e.what());
  }
  if (width <= 0 || height <= 0 || count <= 0) throw FormatError(dir.string() + ": bad meta.json");

  if (fs::exists(dir / "intrinsics.json")) {
    try {
      clip.intrinsics = intrinsics_from_json(read_json(dir / "intrinsics.json"));
    } catch (const ValidationError& e) {
      throw FormatError(dir.string() + "/intrinsics.json: " + e.what());
    }
  } else {
    clip.intrinsics = CameraIntrinsics::with_default_fov(width, height);
  }
  if (clip.intrinsics.width != width || clip.intrinsics.height != height) {
    throw FormatError(dir.string() + ": intrinsics and meta.json disagree on frame size");
  }
  for (int i = 0; i < count; ++i) {
    ColorFrame color = read_png(dir / frame_name(i, "frame", "png"));
    if (color.width() != width || color.height() != height) {
      throw FormatError(dir.string() + ": frame " + std::to_string(i) + " has the wrong size");
    }
    clip.colors.push_back(std::move(color));
    clip.depths.push_back(read_depth_raw(dir / frame_name(i, "frame", "depth"), width, height));
  }
  if (fs::exists(dir / "poses.json")) {
    try {
      clip.camera_poses = trajectory_from_json(read_json(dir / "poses.json"));
    } catch (const ValidationError& e) {
      throw FormatError(dir.string() + "/poses.json: " + e.what());
    }
    if (clip.camera_poses->size() != static_cast<size_t>(count)) {
      throw FormatError(dir.string() + ": poses.json length does not match frame_count");
    }
  }
  return clip;
}

void write_video(const Video& frames, const fs::path& dir) {
  fs::create_directories(dir);
  for (size_t i = 0; i < frames.size(); ++i) {
    write_png(frames[i], dir / frame_name(static_cast<int>(i), "frame", "png"));
  }
}

Video read_video(const fs::path& dir) {
  Video out;
  for (int i = 0;; ++i) {
    const fs::path p = dir / frame_name(i, "frame", "png");
    if (!fs::exists(p)) break;
    out.push_back(read_png(p));
  }
  return out;
}

void write_masks(const MaskVideo& masks, const fs::path& dir) {
  fs::create_directories(dir);
  for (size_t i = 0; i < masks.size(); ++i) {
    write_mask_png(masks[i], dir / frame_name(static_cast<int>(i), "mask", "png"));
  }
}

MaskVideo read_masks(const fs::path& dir) {
  MaskVideo out;
  for (int i = 0;; ++i) {
    const fs::path p = dir / frame_name(i, "mask", "png");
    if (!fs::exists(p)) break;
    out.push_back(read_mask_png(p));
  }
  return out;
}

void write_depths(const DepthVideo& depths, const fs::path& dir) {
  fs::create_directories(dir);
  for (size_t i = 0; i < depths.size(); ++i) {
    write_depth_raw(depths[i], dir / frame_name(static_cast<int>(i), "frame", "depth"));
  }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back(kBase64Alphabet[v & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kBase64Alphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kBase64Alphabet[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = lut[static_cast<unsigned char>(ch)];
    if (v < 0) throw FormatError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace trajcraft
