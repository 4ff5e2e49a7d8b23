#pragma once

#include "trajcraft/diffusion/tensor.hpp"

namespace trajcraft::diffusion {

/// Cosine variance-preserving schedule: alpha = cos(pi t / 2), sigma = sin(pi t / 2).
/// Both endpoints are exact.
struct NoiseSchedule {
  double alpha(double t) const;
  double sigma(double t) const;
};

/// alpha(t) * x0 + sigma(t) * eps.
template <typename T>
VideoTensor<T> forward_noise(const VideoTensor<T>& x0, double t, const VideoTensor<T>& eps,
                             const NoiseSchedule& sched = {});

}  // namespace trajcraft::diffusion
