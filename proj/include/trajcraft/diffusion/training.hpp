#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "trajcraft/diffusion/config.hpp"
#include "trajcraft/diffusion/dataset.hpp"
#include "trajcraft/diffusion/model.hpp"

namespace trajcraft::diffusion {

/// Stage 1 trains everything but cross-attention. Stage 2 trains only cross-attention and
/// the patch embedding.
GradientRequest stage_request(int stage);

/// Adam with bias correction and no weight decay. Only requested groups are written.
class Adam {
 public:
  Adam(const ModelParams<float>& like, const TrainOptions& opts);

  void step(ModelParams<float>& params, const ModelParams<float>& grads,
            const GradientRequest& request, double lr);
  int steps_taken() const { return t_; }

 private:
  TrainOptions opts_;
  ModelParams<float> m_;
  ModelParams<float> v_;
  int t_ = 0;
};

/// Learning rate at `step` of `opts.steps`.
double learning_rate(const TrainOptions& opts, int step);

/// Called after every optimizer step with the step number (1-based) and the batch loss.
using StepCallback = std::function<void(int step, double batch_loss, const ModelParams<float>&)>;

/// Each step draws batch_size items uniformly, t ~ U(0, 1) and Gaussian noise per item, and
/// averages the per-item gradients in draw order. Deterministic for a given seed.
ModelParams<float> train_stage1(ModelParams<float> params,
                                const std::vector<DiffusionExample>& data,
                                const TrainOptions& opts, const StepCallback& on_step = {});

/// Requires every example to carry a source video; those are injected as reference tokens.
ModelParams<float> train_stage2(ModelParams<float> params,
                                const std::vector<DiffusionExample>& data,
                                const TrainOptions& opts, const StepCallback& on_step = {});

/// Fixed (item, t, noise) draws for comparing losses across models.
struct ValidationSet {
  struct Draw {
    size_t item = 0;
    double t = 0.0;
    VideoTensor<float> eps;
  };
  const std::vector<DiffusionExample>* data = nullptr;
  std::vector<Draw> draws;
};

/// `draws` draws cycling over the items in order.
ValidationSet make_validation_set(const std::vector<DiffusionExample>& data, int draws,
                                  std::uint64_t seed);

/// Mean denoising loss over the set, with or without reference injection.
double validation_loss(const ModelParams<float>& params, const ValidationSet& set,
                       bool use_reference);

}  // namespace trajcraft::diffusion
