#include "trajcraft/image.hpp"

#include <algorithm>
#include <cmath>

namespace trajcraft {

std::uint8_t quantize_unit(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

ColorFrame quantized(const ColorFrame& frame) {
  ColorFrame out = frame;
  for (Rgb& p : out.values()) {
    p.r = dequantize_unit(quantize_unit(p.r));
    p.g = dequantize_unit(quantize_unit(p.g));
    p.b = dequantize_unit(quantize_unit(p.b));
  }
  return out;
}

double coverage(const MaskFrame& mask) {
  if (mask.empty()) return 0.0;
  size_t on = 0;
  for (std::uint8_t m : mask.values()) on += m != 0;
  return static_cast<double>(on) / static_cast<double>(mask.size());
}

double coverage(const MaskVideo& masks) {
  if (masks.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : masks) sum += coverage(m);
  return sum / static_cast<double>(masks.size());
}

}  // namespace trajcraft
