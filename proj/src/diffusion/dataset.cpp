#include "trajcraft/diffusion/dataset.hpp"

namespace trajcraft::diffusion {

DiffusionExample to_example(const DatasetItem& item) {
  DiffusionExample ex;
  if (const auto* pair = std::get_if<TrainingPair>(&item)) {
    ex.target = to_tensor<float>(pair->target_color);
    ex.render = to_tensor<float>(pair->condition_color);
    ex.mask = to_tensor<float>(pair->condition_mask);
  } else {
    const auto& tri = std::get<TrainingTriplet>(item);
    ex.target = to_tensor<float>(tri.target_color);
    ex.render = to_tensor<float>(tri.condition_color);
    ex.mask = to_tensor<float>(tri.condition_mask);
    ex.source = to_tensor<float>(tri.source_color);
  }
  return ex;
}

std::vector<DiffusionExample> to_examples(const std::vector<DatasetItem>& items) {
  std::vector<DiffusionExample> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(to_example(item));
  return out;
}

}  // namespace trajcraft::diffusion
