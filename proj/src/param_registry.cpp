#include "mmlogic/param_registry.hpp"

#include <cmath>
#include <stdexcept>

namespace mmlogic {

Tensor ParamRegistry::insert(const std::string& name, Tensor t) {
  if (index_.count(name)) {
    throw std::invalid_argument("parameter '" + name + "' registered twice");
  }
  index_[name] = items_.size();
  items_.emplace_back(name, t);
  return t;
}

Tensor ParamRegistry::weight(const std::string& name, int rows, int cols) {
  Tensor t(rows, cols, 0.0, true);
  const double a = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : t.values()) v = dist(rng_);
  return insert(name, t);
}

Tensor ParamRegistry::embedding(const std::string& name, int rows, int cols) {
  Tensor t(rows, cols, 0.0, true);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : t.values()) v = dist(rng_);
  return insert(name, t);
}

Tensor ParamRegistry::zeros(const std::string& name, int rows, int cols) {
  Tensor t(rows, cols, 0.0, true);
  return insert(name, t);
}

Tensor ParamRegistry::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }
  return items_[it->second].second;
}

std::size_t ParamRegistry::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

void ParamRegistry::zero_grads() {
  for (auto& [name, t] : items_) t.zero_grad();
}

}  // namespace mmlogic
