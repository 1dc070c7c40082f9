#include "mmlogic/tnorm.hpp"

#include <stdexcept>
#include <string>

namespace mmlogic::tnorm {

namespace {

void check_unit(double x, const char* op) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(op) + ": truth value " + std::to_string(x) +
                                " outside [0,1]");
  }
}

}  // namespace

double conj(double a, double b) {
  check_unit(a, "conj");
  check_unit(b, "conj");
  return a * b;
}

double disj(double a, double b) {
  check_unit(a, "disj");
  check_unit(b, "disj");
  return 1.0 - (1.0 - a) * (1.0 - b);
}

double conj_all(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("conj_all: empty input");
  double acc = values.front();
  check_unit(acc, "conj_all");
  for (std::size_t i = 1; i < values.size(); ++i) acc = conj(acc, values[i]);
  return acc;
}

double disj_all(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("disj_all: empty input");
  double acc = values.front();
  check_unit(acc, "disj_all");
  for (std::size_t i = 1; i < values.size(); ++i) acc = disj(acc, values[i]);
  return acc;
}

}  // namespace mmlogic::tnorm
