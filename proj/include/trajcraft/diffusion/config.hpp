#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "trajcraft/diffusion/tensor.hpp"

namespace trajcraft::diffusion {

struct ModelConfig {
  static constexpr int kChannelsIn = 7;  // noisy(3) + render(3) + mask(1)
  static constexpr int kChannelsOut = 3;

  int d_model = 128;
  int n_heads = 4;
  int n_dit_blocks = 6;
  /// Ref-DiT block i is inserted before DiT block i; n_dit_blocks means after the last one.
  std::vector<int> refdit_positions = {2, 4};
  PatchSize patch;
  int text_len = 4;
  int mlp_ratio = 4;
  int time_freq_dim = 64;

  void validate() const;
  int head_dim() const { return d_model / n_heads; }
  int patch_in() const { return kChannelsIn * patch.volume(); }
  int patch_out() const { return kChannelsOut * patch.volume(); }

  bool operator==(const ModelConfig&) const = default;
};

struct TrainOptions {
  int steps = 2000;
  int batch_size = 4;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Cosine decay of the learning rate to zero over `steps`; constant otherwise.
  bool cosine_decay = true;
  std::uint64_t seed = 0;
  /// 0 disables progress logging.
  int log_every = 0;

  void validate() const;
};

nlohmann::json config_to_json(const ModelConfig& cfg);
/// Missing keys keep their defaults; the result is validated.
ModelConfig config_from_json(const nlohmann::json& j);

nlohmann::json options_to_json(const TrainOptions& opts);
TrainOptions options_from_json(const nlohmann::json& j);

/// Default stage-2 learning rate when a config file does not set one.
inline constexpr double kStage2DefaultLr = 2e-4;

}  // namespace trajcraft::diffusion
