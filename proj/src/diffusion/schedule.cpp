#include "trajcraft/diffusion/schedule.hpp"

#include <cmath>
#include <numbers>

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("diffusion time must lie in [0, 1]");
}

}  // namespace

double NoiseSchedule::alpha(double t) const {
  check_time(t);
  if (t == 0.0) return 1.0;
  if (t == 1.0) return 0.0;
  return std::cos(0.5 * std::numbers::pi * t);
}

double NoiseSchedule::sigma(double t) const {
  check_time(t);
  if (t == 0.0) return 0.0;
  if (t == 1.0) return 1.0;
  return std::sin(0.5 * std::numbers::pi * t);
}

template <typename T>
VideoTensor<T> forward_noise(const VideoTensor<T>& x0, double t, const VideoTensor<T>& eps,
                             const NoiseSchedule& sched) {
  if (!x0.same_shape(eps)) {
    throw ShapeError("forward_noise: " + x0.shape_string() + " vs " + eps.shape_string());
  }
  const T a = static_cast<T>(sched.alpha(t));
  const T s = static_cast<T>(sched.sigma(t));
  VideoTensor<T> out = x0;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + s * eps.data[i];
  return out;
}

template VideoTensor<float> forward_noise(const VideoTensor<float>&, double,
                                          const VideoTensor<float>&, const NoiseSchedule&);
template VideoTensor<double> forward_noise(const VideoTensor<double>&, double,
                                           const VideoTensor<double>&, const NoiseSchedule&);

}  // namespace trajcraft::diffusion
