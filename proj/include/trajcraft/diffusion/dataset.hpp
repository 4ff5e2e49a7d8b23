#pragma once

#include <optional>
#include <vector>

#include "trajcraft/curation.hpp"
#include "trajcraft/diffusion/tensor.hpp"

namespace trajcraft::diffusion {

/// A curated item as model-ready tensors in [0, 1].
struct DiffusionExample {
  VideoTensor<float> target;  // n x 3 x h x w
  VideoTensor<float> render;  // n x 3 x h x w
  VideoTensor<float> mask;    // n x 1 x h x w
  std::optional<VideoTensor<float>> source;  // triplets only
};

DiffusionExample to_example(const DatasetItem& item);
std::vector<DiffusionExample> to_examples(const std::vector<DatasetItem>& items);

}  // namespace trajcraft::diffusion
