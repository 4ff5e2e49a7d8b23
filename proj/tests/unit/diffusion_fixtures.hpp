#pragma once

// Small models and inputs shared by the diffusion unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "trajcraft/diffusion/model.hpp"

namespace fixtures {

using namespace trajcraft::diffusion;

/// One DiT block followed by one Ref-DiT block.
inline ModelConfig two_block_config() {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_dit_blocks = 1;
  cfg.refdit_positions = {1};
  cfg.text_len = 2;
  cfg.time_freq_dim = 8;
  return cfg;
}

/// Every tensor drawn from N(0, stddev), so no gate or projection starts at zero.
template <typename T>
ModelParams<T> random_params(const ModelConfig& cfg, std::uint64_t seed, double stddev = 0.3) {
  ModelParams<T> p = allocate_params<T>(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  p.for_each([&](const std::string&, ParamGroup, Matrix<T>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(n(rng));
  });
  return p;
}

template <typename T>
VideoTensor<T> uniform_video(int n, int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VideoTensor<T> v(n, c, h, w);
  for (T& x : v.data) x = static_cast<T>(u(rng));
  return v;
}

template <typename T>
VideoTensor<T> gaussian_video(int n, int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  VideoTensor<T> v(n, c, h, w);
  for (T& x : v.data) x = static_cast<T>(g(rng));
  return v;
}

template <typename T>
VideoTensor<T> binary_mask(int n, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VideoTensor<T> v(n, 1, h, w);
  for (T& x : v.data) x = (rng() & 1) ? T{1} : T{0};
  return v;
}

/// Inputs for one denoising term; owns its tensors.
template <typename T>
struct ExampleData {
  VideoTensor<T> x0, eps, render, mask, ref;

  ExampleData(int n, int h, int w, std::uint64_t seed)
      : x0(uniform_video<T>(n, 3, h, w, seed)),
        eps(gaussian_video<T>(n, 3, h, w, seed + 1)),
        render(uniform_video<T>(n, 3, h, w, seed + 2)),
        mask(binary_mask<T>(n, h, w, seed + 3)),
        ref(uniform_video<T>(n, 3, h, w, seed + 4)) {}

  DenoisingExample<T> term(double t, bool with_ref) const {
    return {&x0, &eps, t, &render, &mask, with_ref ? &ref : nullptr};
  }
};

struct GradientCheck {
  double worst_relative_error = 0.0;
  int probes = 0;
  std::string worst_name;
};

/// Central differences of the denoising loss at `probes` random parameter entries, compared with
/// the analytic gradient. Relative error uses max(|numeric|, |analytic|, 1e-6) as the scale.
inline GradientCheck finite_difference_check(ModelParams<double>& params,
                                             const DenoisingExample<double>& ex, int probes,
                                             std::uint64_t seed, double h = 1e-5) {
  ModelParams<double> grads = params.zeros_like();
  denoising_loss_and_grad(params, ex, grads);

  std::vector<std::pair<std::string, Matrix<double>*>> values;
  std::vector<Matrix<double>*> analytic;
  params.for_each([&](const std::string& name, ParamGroup, Matrix<double>& m) {
    values.emplace_back(name, &m);
  });
  grads.for_each([&](const std::string&, ParamGroup, Matrix<double>& m) { analytic.push_back(&m); });

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick_tensor(0, values.size() - 1);
  GradientCheck out;
  for (int i = 0; i < probes; ++i) {
    const size_t ti = pick_tensor(rng);
    Matrix<double>& m = *values[ti].second;
    std::uniform_int_distribution<Eigen::Index> pick_entry(0, m.size() - 1);
    const Eigen::Index e = pick_entry(rng);
    const double orig = m.data()[e];
    m.data()[e] = orig + h;
    const double up = denoising_loss(params, ex);
    m.data()[e] = orig - h;
    const double down = denoising_loss(params, ex);
    m.data()[e] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double exact = analytic[ti]->data()[e];
    const double rel = std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-6});
    if (rel >= out.worst_relative_error) {
      out.worst_relative_error = rel;
      out.worst_name = values[ti].first + "[" + std::to_string(e) + "]";
    }
    ++out.probes;
  }
  return out;
}

}  // namespace fixtures
