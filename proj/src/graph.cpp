#include "mmlogic/graph.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mmlogic {

CrossModalGraph build_adjacency(const std::vector<std::pair<int, int>>& dep_edges,
                                int m, int z) {
  if (m < 1) throw std::invalid_argument("build_adjacency: need at least one token node");
  if (z < 1) throw std::invalid_argument("build_adjacency: grid side must be >= 1");
  const int r = z * z;
  const int n = m + r;
  Tensor a(n, n);

  for (const auto& [i, j] : dep_edges) {
    if (i < 0 || i >= m || j < 0 || j >= m) {
      throw std::invalid_argument("build_adjacency: dependency edge (" + std::to_string(i) +
                                  "," + std::to_string(j) + ") outside token range [0," +
                                  std::to_string(m) + ")");
    }
    if (i == j) continue;  // no self-loops
    a.mut(i, j) = 1.0;
    a.mut(j, i) = 1.0;
  }

  // full text-visual connectivity
  for (int i = 0; i < m; ++i) {
    for (int q = 0; q < r; ++q) {
      a.mut(i, m + q) = 1.0;
      a.mut(m + q, i) = 1.0;
    }
  }

  // 8-neighborhood grid adjacency between patches
  for (int qi = 0; qi < r; ++qi) {
    for (int qj = 0; qj < r; ++qj) {
      if (qi == qj) continue;
      const int dr = qi / z - qj / z;
      const int dc = qi % z - qj % z;
      if (std::abs(dr) <= 1 && std::abs(dc) <= 1) {
        a.mut(m + qi, m + qj) = 1.0;
      }
    }
  }

  CrossModalGraph g;
  g.m = m;
  g.r = r;
  g.z = z;
  g.a = a;
  g.a_norm = normalize_adjacency(a);
  return g;
}

Tensor normalize_adjacency(const Tensor& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("normalize_adjacency: matrix must be square, got " + shape_str(a));
  }
  const int n = a.rows();
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a(i, j);
    if (deg <= 0.0) {
      throw std::invalid_argument("normalize_adjacency: node " + std::to_string(i) +
                                  " has zero degree");
    }
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Tensor out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.mut(i, j) = inv_sqrt_deg[i] * a(i, j) * inv_sqrt_deg[j];
  return out;
}

GcnStack::GcnStack(ParamRegistry& reg, int layers, int d) {
  if (layers < 1) throw std::invalid_argument("gcn: need at least one layer");
  for (int l = 1; l <= layers; ++l) {
    weights.push_back(reg.weight("gcn.w" + std::to_string(l), d, d));
  }
}

std::vector<Tensor> gcn_forward(const Tensor& h0, const Tensor& a_norm,
                                const GcnStack& stack) {
  if (h0.rows() != a_norm.rows()) {
    throw ShapeError("gcn_forward: node count mismatch, features " + shape_str(h0) +
                     " vs adjacency " + shape_str(a_norm));
  }
  for (const Tensor& w : stack.weights) {
    if (w.rows() != h0.cols()) {
      throw ShapeError("gcn_forward: feature width " + std::to_string(h0.cols()) +
                       " does not match layer weight " + shape_str(w));
    }
  }
  std::vector<Tensor> layers;
  layers.push_back(h0);
  for (const Tensor& w : stack.weights) {
    layers.push_back(relu(matmul(matmul(a_norm, layers.back()), w)));
  }
  return layers;
}

}  // namespace mmlogic
