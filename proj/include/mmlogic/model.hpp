#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmlogic/clause.hpp"
#include "mmlogic/data.hpp"
#include "mmlogic/encoders.hpp"
#include "mmlogic/graph.hpp"
#include "mmlogic/objects.hpp"
#include "mmlogic/param_registry.hpp"
#include "mmlogic/tensor.hpp"

namespace mmlogic {

struct ModelConfig {
  int d = 200;
  int z = 7;
  int f = 8;
  int vocab = 1000;
  int k = 5;
  int g = 10;
  double beta = 0.1;
  int layers = 2;                  // L
  std::vector<int> layer_set = {2};
  std::vector<std::string> labels;
  bool text_mixing = true;
  std::uint64_t seed = 1;

  void validate() const;
};

// Hard selections captured during one forward pass so a replay (e.g. finite
// differences) stays inside the same piecewise region.
struct LayerSelections {
  std::array<std::vector<int>, kMetaPredicateCount> objects;
  std::vector<std::vector<int>> atoms;  // [label] -> atom indices
};

struct Selections {
  std::vector<LayerSelections> layers;  // parallel to layer_set
};

struct SampleTrace {
  std::vector<Clause> clauses;  // layer-major, then label
  std::vector<double> head_truths;
  std::vector<double> probs;
  int predicted = -1;
};

struct ForwardOptions {
  SampleTrace* trace = nullptr;
  Selections* capture = nullptr;
  const Selections* replay = nullptr;
  bool with_loss = true;
};

struct ForwardResult {
  std::vector<double> head_truths;
  std::vector<double> probs;
  int predicted = -1;
  int gold = -1;
  Tensor loss;  // defined when with_loss
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  ForwardResult forward(const MultimodalSample& sample, const ForwardOptions& opts = {});

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return reg_; }
  const ParamRegistry& registry() const { return reg_; }
  const LabelSpace& labels() const { return labels_; }
  int label_index(const std::string& name) const;

 private:
  ModelConfig cfg_;
  ParamRegistry reg_;
  TextEncoder text_;
  PatchEncoder patch_;
  GcnStack gcn_;
  ObjectProjections proj_;
  std::array<ObjectScorer, kMetaPredicateCount> scorers_;
  CorrelationBank bank_;
  Tensor attn_text_, attn_image_;   // d x 1 each
  Tensor sel_input_, sel_label_;    // d x 2d, 4d x 1
  Tensor truth_w_;                  // 4d x 1
  LabelSpace labels_;
};

}  // namespace mmlogic
