#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spin/adam.hpp"
#include "spin/tensor.hpp"

namespace spin {

// Flat binary checkpoint: magic "SPINCKPT", version u32, then one record per
// named tensor: name length u32, name bytes, rank u32, extents u32...,
// raw little-endian f32 values. Optimizer moments ride along under the
// parameter name suffixed with "/m" and "/v"; the step counter is stored as
// a one-element record named "adam/step".
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<float>*>>& params,
                     const AdamState<float>* adam = nullptr);

// Loads values into the given parameter tensors (shapes must match). When
// `adam` is non-null and the file carries optimizer records, moments and the
// step counter are restored as well.
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<float>*>>& params,
                     AdamState<float>* adam = nullptr);

}  // namespace spin
