#include "trajcraft/diffusion/sampler.hpp"

#include <algorithm>
#include <random>

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

VideoTensor<float> sample(const ModelParams<float>& params, const VideoTensor<float>& render,
                          const VideoTensor<float>& mask, const VideoTensor<float>* ref, int steps,
                          std::uint64_t seed) {
  if (steps < 1) throw ValidationError("sample: steps must be at least 1");
  const NoiseSchedule sched;
  VideoTensor<float> x(render.frames, ModelConfig::kChannelsOut, render.height, render.width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (float& v : x.data) v = dist(rng);

  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - static_cast<double>(i) / steps;
    const double t_next = i + 1 == steps ? 0.0 : 1.0 - static_cast<double>(i + 1) / steps;
    const VideoTensor<float> eps = predict_noise(params, x, t, render, mask, ref);
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    const double a_next = sched.alpha(t_next);
    const double s_next = sched.sigma(t_next);
    const double inv_a = 1.0 / std::max(a, kAlphaFloor);
    for (size_t j = 0; j < x.data.size(); ++j) {
      const double x0 = std::clamp((x.data[j] - s * eps.data[j]) * inv_a, 0.0, 1.0);
      x.data[j] = static_cast<float>(a_next * x0 + s_next * eps.data[j]);
    }
  }
  for (float& v : x.data) v = std::clamp(v, 0.0f, 1.0f);
  return x;
}

}  // namespace trajcraft::diffusion
