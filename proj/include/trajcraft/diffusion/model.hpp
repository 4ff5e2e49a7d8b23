#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajcraft/diffusion/config.hpp"
#include "trajcraft/diffusion/tensor.hpp"

namespace trajcraft::diffusion {

/// Which training stage may touch a tensor.
enum class ParamGroup { patch_embed, cross_attention, backbone };

const char* group_name(ParamGroup g);

/// y = x W + b with W stored in x out.
template <typename T>
struct Linear {
  Matrix<T> weight;
  Matrix<T> bias;  // 1 x out
};

template <typename T>
struct DitBlockParams {
  Linear<T> modulation;  // d -> 6d: shift, scale, gate for attention then MLP
  Linear<T> qkv;
  Linear<T> attn_out;
  Linear<T> mlp_in;
  Linear<T> mlp_out;
};

template <typename T>
struct RefDitBlockParams {
  Linear<T> modulation;  // d -> 3d: shift, scale, gate for self-attention
  Linear<T> qkv;
  Linear<T> attn_out;
  Linear<T> cross_q;
  Linear<T> cross_k;
  Linear<T> cross_v;
  Linear<T> cross_out;  // zero at init
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  Linear<T> patch_embed;
  Matrix<T> text_tokens;  // text_len x d
  Linear<T> time_in;
  Linear<T> time_out;
  std::vector<DitBlockParams<T>> dit;
  std::vector<RefDitBlockParams<T>> refdit;
  Linear<T> final_modulation;  // d -> 2d: shift, scale
  Linear<T> head;

  /// Calls f(name, group, tensor) for every tensor in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  size_t parameter_count() const;
  bool all_finite() const;
  ModelParams zeros_like() const;

  template <typename U>
  ModelParams<U> cast() const;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    const auto lin = [&f](const std::string& name, ParamGroup g, auto& l) {
      f(name + ".weight", g, l.weight);
      f(name + ".bias", g, l.bias);
    };
    lin("patch_embed", ParamGroup::patch_embed, self.patch_embed);
    f(std::string("text_tokens"), ParamGroup::backbone, self.text_tokens);
    lin("time_in", ParamGroup::backbone, self.time_in);
    lin("time_out", ParamGroup::backbone, self.time_out);
    for (size_t i = 0; i < self.dit.size(); ++i) {
      const std::string p = "dit." + std::to_string(i) + ".";
      auto& b = self.dit[i];
      lin(p + "modulation", ParamGroup::backbone, b.modulation);
      lin(p + "qkv", ParamGroup::backbone, b.qkv);
      lin(p + "attn_out", ParamGroup::backbone, b.attn_out);
      lin(p + "mlp_in", ParamGroup::backbone, b.mlp_in);
      lin(p + "mlp_out", ParamGroup::backbone, b.mlp_out);
    }
    for (size_t i = 0; i < self.refdit.size(); ++i) {
      const std::string p = "refdit." + std::to_string(i) + ".";
      auto& b = self.refdit[i];
      lin(p + "modulation", ParamGroup::backbone, b.modulation);
      lin(p + "qkv", ParamGroup::backbone, b.qkv);
      lin(p + "attn_out", ParamGroup::backbone, b.attn_out);
      lin(p + "cross_q", ParamGroup::cross_attention, b.cross_q);
      lin(p + "cross_k", ParamGroup::cross_attention, b.cross_k);
      lin(p + "cross_v", ParamGroup::cross_attention, b.cross_v);
      lin(p + "cross_out", ParamGroup::cross_attention, b.cross_out);
    }
    lin("final_modulation", ParamGroup::backbone, self.final_modulation);
    lin("head", ParamGroup::backbone, self.head);
  }
};

/// All tensors allocated at their configured shapes and filled with zeros.
template <typename T>
ModelParams<T> allocate_params(const ModelConfig& cfg);

/// Xavier-uniform projections, N(0, 0.02) text tokens and timestep MLP, zero biases, and
/// zero adaptive-norm modulations, output head and cross-attention output projection.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Interleaving of the two block kinds: (is_refdit, index within its kind).
std::vector<std::pair<bool, int>> block_order(const ModelConfig& cfg);

template <typename T>
struct TokenGrid {
  Matrix<T> tokens;  // count x d
  GridShape grid;
};

/// Fixed 3D sinusoidal embedding, one row per token in raster order.
template <typename T>
Matrix<T> positional_embedding(const GridShape& grid, int d_model);

/// Patch embedding plus positional embedding of a 7-channel condition video.
template <typename T>
TokenGrid<T> patchify(const VideoTensor<T>& condition, const ModelParams<T>& params);

/// Sinusoidal features of 1000 t through the two-layer timestep MLP, 1 x d.
template <typename T>
Matrix<T> timestep_embedding(const ModelParams<T>& params, double t);

/// adaLN-Zero transformer block over the full [text, view] sequence.
template <typename T>
Matrix<T> dit_block(const DitBlockParams<T>& block, int n_heads, const Matrix<T>& tokens,
                    const Matrix<T>& t_embed);

/// Self-attention over [text, view] followed by cross-attention from the view rows (everything
/// after the first text_len rows) to `ref_tokens`. Without reference tokens the cross-attention
/// sub-layer is skipped.
template <typename T>
Matrix<T> refdit_block(const RefDitBlockParams<T>& block, int n_heads, int text_len,
                       const Matrix<T>& tokens, const Matrix<T>* ref_tokens,
                       const Matrix<T>& t_embed);

/// Noise prediction for x_t. `ref` is the source video for reference injection, or null.
template <typename T>
VideoTensor<T> predict_noise(const ModelParams<T>& params, const VideoTensor<T>& x_t, double t,
                             const VideoTensor<T>& render, const VideoTensor<T>& mask,
                             const VideoTensor<T>* ref);

/// Which parameter groups receive gradients. Skipped groups are left untouched.
struct GradientRequest {
  bool patch_embed = true;
  bool cross_attention = true;
  bool backbone = true;

  bool wants(ParamGroup g) const {
    switch (g) {
      case ParamGroup::patch_embed: return patch_embed;
      case ParamGroup::cross_attention: return cross_attention;
      case ParamGroup::backbone: return backbone;
    }
    return false;
  }
};

/// One term of the denoising objective.
template <typename T>
struct DenoisingExample {
  const VideoTensor<T>* x0 = nullptr;
  const VideoTensor<T>* eps = nullptr;
  double t = 0.0;
  const VideoTensor<T>* render = nullptr;
  const VideoTensor<T>* mask = nullptr;
  const VideoTensor<T>* ref = nullptr;
};

/// mean((predict_noise(alpha x0 + sigma eps) - eps)^2).
template <typename T>
T denoising_loss(const ModelParams<T>& params, const DenoisingExample<T>& ex);

/// Same loss; adds weight * dLoss/dparam into `grads` for the requested groups.
template <typename T>
T denoising_loss_and_grad(const ModelParams<T>& params, const DenoisingExample<T>& ex,
                          ModelParams<T>& grads, const GradientRequest& request = {},
                          T weight = T{1});

}  // namespace trajcraft::diffusion
