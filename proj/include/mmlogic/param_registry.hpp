#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmlogic/tensor.hpp"

namespace mmlogic {

// Named trainable parameters. Iteration order is the registration order, so
// two registries built through the same construction sequence iterate (and
// initialize) identically.
class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  // uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))
  Tensor weight(const std::string& name, int rows, int cols);
  // normal(0, 1)
  Tensor embedding(const std::string& name, int rows, int cols);
  // zero-initialized (biases)
  Tensor zeros(const std::string& name, int rows, int cols);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::size_t total_size() const;
  std::uint64_t seed() const { return seed_; }

  void zero_grads();

 private:
  Tensor insert(const std::string& name, Tensor t);

  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mmlogic
