#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "trajcraft/diffusion/model.hpp"

namespace trajcraft::diffusion {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout, all integers little-endian u32:
///   "TRJCKPT\0" | version | header length | header JSON {config, extra} | tensor count |
///   per tensor: name length | name | rank | dims... | f32 payload (little-endian, row-major)
std::string encode_checkpoint(const ModelParams<float>& params, const nlohmann::json& extra = {});

struct Checkpoint {
  ModelParams<float> params;
  nlohmann::json extra;
};

/// Throws FormatError on a bad magic, unknown version, truncation or a tensor that does not
/// match the stored config.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path,
                     const nlohmann::json& extra = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace trajcraft::diffusion
