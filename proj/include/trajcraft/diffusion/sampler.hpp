#pragma once

#include <cstdint>

#include "trajcraft/diffusion/model.hpp"
#include "trajcraft/diffusion/schedule.hpp"

namespace trajcraft::diffusion {

/// Lower bound on alpha when estimating x0; only matters at t = 1.
inline constexpr double kAlphaFloor = 1e-3;

/// Deterministic DDIM (eta = 0) from t = 1 to t = 0 over `steps` uniform intervals.
/// Starting noise comes from `seed`. Each step estimates x0 = (x - sigma eps) / max(alpha, floor),
/// clips it to [0, 1] and moves to alpha' x0 + sigma' eps. The result is clamped to [0, 1].
VideoTensor<float> sample(const ModelParams<float>& params, const VideoTensor<float>& render,
                          const VideoTensor<float>& mask, const VideoTensor<float>* ref, int steps,
                          std::uint64_t seed);

}  // namespace trajcraft::diffusion
