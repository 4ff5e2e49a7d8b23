#include "trajcraft/diffusion/training.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

namespace {

template <typename P>
std::vector<Matrix<float>*> tensors(P& params) {
  std::vector<Matrix<float>*> out;
  params.for_each([&out](const std::string&, ParamGroup, auto& m) {
    out.push_back(const_cast<Matrix<float>*>(&m));
  });
  return out;
}

VideoTensor<float> gaussian_like(const VideoTensor<float>& like, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  VideoTensor<float> out(like.frames, like.channels, like.height, like.width);
  for (float& v : out.data) v = dist(rng);
  return out;
}

ModelParams<float> train(ModelParams<float> params, const std::vector<DiffusionExample>& data,
                         const TrainOptions& opts, const StepCallback& on_step, int stage) {
  opts.validate();
  if (data.empty()) throw ValidationError("training dataset is empty");
  const bool use_ref = stage == 2;
  if (use_ref) {
    for (const auto& ex : data) {
      if (!ex.source) {
        throw ValidationError("stage 2 needs triplets: an item has no source video");
      }
    }
  }
  const GradientRequest request = stage_request(stage);
  Adam adam(params, opts);
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  const float weight = 1.0f / static_cast<float>(opts.batch_size);

  for (int step = 0; step < opts.steps; ++step) {
    ModelParams<float> grads = params.zeros_like();
    double loss = 0.0;
    for (int b = 0; b < opts.batch_size; ++b) {
      const DiffusionExample& ex = data[pick(rng)];
      const double t = time(rng);
      const VideoTensor<float> eps = gaussian_like(ex.target, rng);
      const DenoisingExample<float> term{&ex.target, &eps,     t,
                                         &ex.render, &ex.mask, use_ref ? &*ex.source : nullptr};
      loss += denoising_loss_and_grad(params, term, grads, request, weight);
    }
    adam.step(params, grads, request, learning_rate(opts, step));
    loss /= opts.batch_size;
    if (on_step) on_step(step + 1, loss, params);
  }
  return params;
}

}  // namespace

GradientRequest stage_request(int stage) {
  if (stage == 1) return {.patch_embed = true, .cross_attention = false, .backbone = true};
  if (stage == 2) return {.patch_embed = true, .cross_attention = true, .backbone = false};
  throw ValidationError("training stage must be 1 or 2");
}

Adam::Adam(const ModelParams<float>& like, const TrainOptions& opts)
    : opts_(opts), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ModelParams<float>& params, const ModelParams<float>& grads,
                const GradientRequest& request, double lr) {
  ++t_;
  std::vector<ParamGroup> groups;
  params.for_each([&groups](const std::string&, ParamGroup g, const Matrix<float>&) {
    groups.push_back(g);
  });
  const auto p = tensors(params);
  const auto g = tensors(grads);
  const auto m = tensors(m_);
  const auto v = tensors(v_);
  const double b1 = opts_.beta1;
  const double b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, t_);
  const double c2 = 1.0 - std::pow(b2, t_);
  for (size_t i = 0; i < p.size(); ++i) {
    if (!request.wants(groups[i])) continue;
    float* pd = p[i]->data();
    const float* gd = g[i]->data();
    float* md = m[i]->data();
    float* vd = v[i]->data();
    for (Eigen::Index j = 0; j < p[i]->size(); ++j) {
      md[j] = static_cast<float>(b1 * md[j] + (1.0 - b1) * gd[j]);
      vd[j] = static_cast<float>(b2 * vd[j] + (1.0 - b2) * gd[j] * gd[j]);
      const double mhat = md[j] / c1;
      const double vhat = vd[j] / c2;
      pd[j] = static_cast<float>(pd[j] - lr * mhat / (std::sqrt(vhat) + opts_.adam_eps));
    }
  }
}

double learning_rate(const TrainOptions& opts, int step) {
  if (!opts.cosine_decay || opts.steps <= 0) return opts.lr;
  return opts.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * step / opts.steps));
}

ModelParams<float> train_stage1(ModelParams<float> params,
                                const std::vector<DiffusionExample>& data,
                                const TrainOptions& opts, const StepCallback& on_step) {
  return train(std::move(params), data, opts, on_step, 1);
}

ModelParams<float> train_stage2(ModelParams<float> params,
                                const std::vector<DiffusionExample>& data,
                                const TrainOptions& opts, const StepCallback& on_step) {
  return train(std::move(params), data, opts, on_step, 2);
}

ValidationSet make_validation_set(const std::vector<DiffusionExample>& data, int draws,
                                  std::uint64_t seed) {
  if (data.empty() || draws < 1) throw ValidationError("validation set needs items and draws");
  ValidationSet set;
  set.data = &data;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  for (int i = 0; i < draws; ++i) {
    ValidationSet::Draw d;
    d.item = static_cast<size_t>(i) % data.size();
    d.t = time(rng);
    d.eps = gaussian_like(data[d.item].target, rng);
    set.draws.push_back(std::move(d));
  }
  return set;
}

double validation_loss(const ModelParams<float>& params, const ValidationSet& set,
                       bool use_reference) {
  if (!set.data || set.draws.empty()) throw ValidationError("empty validation set");
  double total = 0.0;
  for (const auto& d : set.draws) {
    const DiffusionExample& ex = (*set.data)[d.item];
    if (use_reference && !ex.source) throw ValidationError("validation item has no source video");
    const DenoisingExample<float> term{&ex.target, &d.eps,   d.t,
                                       &ex.render, &ex.mask, use_reference ? &*ex.source : nullptr};
    total += denoising_loss(params, term);
  }
  return total / static_cast<double>(set.draws.size());
}

}  // namespace trajcraft::diffusion
