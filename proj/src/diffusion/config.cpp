#include "trajcraft/diffusion/config.hpp"

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

void ModelConfig::validate() const {
  if (d_model < 1 || n_heads < 1 || n_dit_blocks < 1 || text_len < 1 || mlp_ratio < 1 ||
      time_freq_dim < 2 || time_freq_dim % 2) {
    throw ValidationError("model config: sizes must be positive (time_freq_dim even)");
  }
  if (d_model % n_heads) throw ValidationError("model config: n_heads must divide d_model");
  if (patch.t < 1 || patch.h < 1 || patch.w < 1) {
    throw ValidationError("model config: patch sizes must be positive");
  }
  for (size_t i = 0; i < refdit_positions.size(); ++i) {
    const int p = refdit_positions[i];
    if (p < 0 || p > n_dit_blocks) {
      throw ValidationError("model config: refdit position " + std::to_string(p) +
                            " outside [0, n_dit_blocks]");
    }
    if (i > 0 && p <= refdit_positions[i - 1]) {
      throw ValidationError("model config: refdit positions must be strictly increasing");
    }
  }
}

void TrainOptions::validate() const {
  if (steps < 0 || batch_size < 1) throw ValidationError("train options: bad steps or batch size");
  if (!(lr >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw ValidationError("train options: bad optimizer hyperparameters");
  }
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"d_model", cfg.d_model},
          {"n_heads", cfg.n_heads},
          {"n_dit_blocks", cfg.n_dit_blocks},
          {"refdit_positions", cfg.refdit_positions},
          {"patch", {cfg.patch.t, cfg.patch.h, cfg.patch.w}},
          {"text_len", cfg.text_len},
          {"mlp_ratio", cfg.mlp_ratio},
          {"time_freq_dim", cfg.time_freq_dim},
          {"channels_in", ModelConfig::kChannelsIn}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    if (!j.is_object()) throw ValidationError("model config must be a JSON object");
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.n_dit_blocks = j.value("n_dit_blocks", cfg.n_dit_blocks);
    cfg.refdit_positions = j.value("refdit_positions", cfg.refdit_positions);
    if (j.contains("patch")) {
      const auto p = j.at("patch").get<std::vector<int>>();
      if (p.size() != 3) throw ValidationError("model config: patch must have 3 entries");
      cfg.patch = {p[0], p[1], p[2]};
    }
    cfg.text_len = j.value("text_len", cfg.text_len);
    cfg.mlp_ratio = j.value("mlp_ratio", cfg.mlp_ratio);
    cfg.time_freq_dim = j.value("time_freq_dim", cfg.time_freq_dim);
    if (j.contains("channels_in") && j.at("channels_in").get<int>() != ModelConfig::kChannelsIn) {
      throw ValidationError("model config: channels_in must be 7");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json options_to_json(const TrainOptions& o) {
  return {{"steps", o.steps},   {"batch_size", o.batch_size}, {"lr", o.lr},
          {"beta1", o.beta1},   {"beta2", o.beta2},           {"adam_eps", o.adam_eps},
          {"cosine_decay", o.cosine_decay}, {"seed", o.seed}, {"log_every", o.log_every}};
}

TrainOptions options_from_json(const nlohmann::json& j) {
  TrainOptions o;
  try {
    if (!j.is_object()) throw ValidationError("train options must be a JSON object");
    o.steps = j.value("steps", o.steps);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.lr = j.value("lr", o.lr);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.adam_eps = j.value("adam_eps", o.adam_eps);
    o.cosine_decay = j.value("cosine_decay", o.cosine_decay);
    o.seed = j.value("seed", o.seed);
    o.log_every = j.value("log_every", o.log_every);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train options: ") + e.what());
  }
  o.validate();
  return o;
}

}  // namespace trajcraft::diffusion
