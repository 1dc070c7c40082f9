#pragma once

#include <utility>
#include <vector>

#include "mmlogic/param_registry.hpp"
#include "mmlogic/tensor.hpp"

namespace mmlogic {

// Text-image graph over m token nodes followed by r = z*z patch nodes.
// A is binary symmetric with no self-loops; a_norm = D^{-1/2} A D^{-1/2}.
struct CrossModalGraph {
  int m = 0;
  int r = 0;
  int z = 0;
  Tensor a;       // (m+r) x (m+r), constant
  Tensor a_norm;  // same shape, constant
};

// Text-text edges are the symmetrized dependency pairs, every text node
// connects to every patch node, and patches follow 8-neighborhood grid
// adjacency (0-based index q: row = q/z, col = q%z).
CrossModalGraph build_adjacency(const std::vector<std::pair<int, int>>& dep_edges,
                                int m, int z);

// Symmetric normalization; rejects zero-degree nodes naming the node index.
Tensor normalize_adjacency(const Tensor& a);

struct GcnStack {
  std::vector<Tensor> weights;  // L matrices, each d x d

  GcnStack() = default;
  GcnStack(ParamRegistry& reg, int layers, int d);
};

// Returns H^0 .. H^L with H^l = ReLU(a_norm H^{l-1} W^l) for l >= 1.
std::vector<Tensor> gcn_forward(const Tensor& h0, const Tensor& a_norm,
                                const GcnStack& stack);

}  // namespace mmlogic
