#pragma once

// Shared test oracles. These stay independent of the implementation paths
// they check: the simplex projection enumerates candidate supports and picks
// by objective value, and gradients are verified by central differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mmlogic/tensor.hpp"

namespace testutil {

// Brute-force Euclidean projection onto the probability simplex.
// For n <= 12 every nonempty support subset is tried; for larger n the
// candidates are the prefixes of the descending sort. In both cases the
// feasible candidate with the smallest squared distance to z wins.
inline std::vector<double> simplex_projection_oracle(const std::vector<double>& z) {
  const int n = static_cast<int>(z.size());
  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();

  auto consider = [&](const std::vector<int>& support) {
    double sum = 0.0;
    for (int i : support) sum += z[i];
    const double tau = (sum - 1.0) / static_cast<double>(support.size());
    std::vector<double> p(n, 0.0);
    for (int i : support) {
      p[i] = z[i] - tau;
      if (p[i] < -1e-12) return;  // infeasible candidate
    }
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += (p[i] - z[i]) * (p[i] - z[i]);
    if (obj < best_obj) {
      best_obj = obj;
      best = p;
    }
  };

  if (n <= 12) {
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      std::vector<int> support;
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) support.push_back(i);
      }
      consider(support);
    }
  } else {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return z[a] > z[b]; });
    for (int take = 1; take <= n; ++take) {
      consider(std::vector<int>(order.begin(), order.begin() + take));
    }
  }
  return best;
}

// Max relative error between analytic gradients (via backward) and central
// finite differences over every entry of every leaf. build() must construct
// the scalar output from the leaves' current values.
inline double max_grad_error(const std::vector<mmlogic::Tensor>& leaves,
                             const std::function<mmlogic::Tensor()>& build,
                             double h = 1e-5) {
  using mmlogic::Tensor;
  for (Tensor leaf : leaves) leaf.zero_grad();
  Tensor out = build();
  mmlogic::backward(out);

  std::vector<std::vector<double>> analytic;
  for (const Tensor& leaf : leaves) analytic.push_back(leaf.grad());

  double max_err = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    Tensor leaf = leaves[l];
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.values()[i];
      leaf.values()[i] = saved + h;
      const double plus = build().item();
      leaf.values()[i] = saved - h;
      const double minus = build().item();
      leaf.values()[i] = saved;

      const double fd = (plus - minus) / (2.0 * h);
      const double a = analytic[l][i];
      const double denom = std::max(std::abs(a), std::abs(fd));
      const double err = denom < 1e-8 ? 0.0 : std::abs(a - fd) / denom;
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

inline mmlogic::Tensor random_tensor(std::mt19937_64& rng, int rows, int cols,
                                     double lo = -1.5, double hi = 1.5,
                                     bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  mmlogic::Tensor t(rows, cols, 0.0, requires_grad);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace testutil
