#pragma once

#include <vector>

#include "mmlogic/param_registry.hpp"
#include "mmlogic/tensor.hpp"

namespace mmlogic {

// Embedding-table text encoder with an optional ReLU mixing layer.
// Unknown ids map to the reserved UNK id 0.
struct TextEncoder {
  int vocab = 0;
  int dim = 0;
  bool mixing = false;
  Tensor table;          // vocab x d
  Tensor mix_w, mix_b;   // d x d, 1 x d (only when mixing)

  TextEncoder() = default;
  TextEncoder(ParamRegistry& reg, int vocab_size, int d, bool with_mixing);

  Tensor encode(const std::vector<int>& tokens) const;  // m x d
};

// Two-layer perceptron f -> d -> d applied per patch row.
struct PatchEncoder {
  int feat = 0;
  int dim = 0;
  int grid = 0;  // z; expects z*z patch rows
  Tensor w1, b1, w2, b2;

  PatchEncoder() = default;
  PatchEncoder(ParamRegistry& reg, int f, int d, int z);

  Tensor encode(const std::vector<std::vector<double>>& patches) const;  // r x d
};

}  // namespace mmlogic
