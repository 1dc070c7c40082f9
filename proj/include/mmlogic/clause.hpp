#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mmlogic/objects.hpp"
#include "mmlogic/param_registry.hpp"
#include "mmlogic/tensor.hpp"

namespace mmlogic {

// g learnable correlation rows per meta-predicate plus the 2d x d mixing
// matrices that select among them.
struct CorrelationBank {
  int g = 0;
  std::array<Tensor, kMetaPredicateCount> corr;  // g x d each
  std::array<Tensor, kMetaPredicateCount> mix;   // 2d x d each

  CorrelationBank() = default;
  CorrelationBank(ParamRegistry& reg, int g, int d);
};

struct LabelSpace {
  std::vector<std::string> names;
  Tensor embed;  // |labels| x d

  LabelSpace() = default;
  LabelSpace(ParamRegistry& reg, std::vector<std::string> label_names, int d);

  int index_of(const std::string& name) const;  // -1 when unknown
  Tensor row(int label) const { return gather_rows(embed, {label}); }
};

// Per-instantiation predicate embeddings: each output row is a sparsemax
// mixture of the bank's g correlation rows. weights_out (k x g), when
// provided, receives the mixture weights for explanation output.
Tensor predicate_embeddings(const ObjectSet& objset, const Tensor& label_row,
                            const Tensor& corr, const Tensor& mix,
                            Tensor* weights_out = nullptr);

// Attention-weighted summaries of all tokens and patches; both are d x 1.
std::pair<Tensor, Tensor> global_summaries(const Tensor& tokens, const Tensor& patches,
                                           const Tensor& w_text, const Tensor& w_image);

// Final atom scores: sparsemax(S_input o S_label) over all 5k atoms.
Tensor score_atoms(const Tensor& predicate_embed, const Tensor& text_summary,
                   const Tensor& image_summary, const Tensor& label_row,
                   const Tensor& w_input, const Tensor& w_label);

struct ClauseAtom {
  int atom_index = 0;  // row in the stacked 5k ordering
  MetaPredicateKind kind = MetaPredicateKind::Token;
  int slot = 0;        // position within the kind's k objects
  std::pair<int, int> constants{-1, -1};
  double score = 0.0;  // s drawn from S
  double truth = 0.0;  // filled by clause evaluation
  std::vector<double> correlation_weights;  // g mixture weights from the bank
};

struct Clause {
  int layer = 0;
  int label = 0;
  std::vector<ClauseAtom> atoms;
  double conjunction = 0.0;  // filled by clause evaluation
};

// floor(5k * beta); throws when the result would be zero.
int clause_length(int k, double beta);

// Picks the floor(5k*beta) highest-scoring atoms (ties to the lower index).
// `forced` replays a previously captured selection.
Clause generate_clause(const Tensor& scores,
                       const std::array<ObjectSet, kMetaPredicateCount>& objsets,
                       int k, double beta, int layer, int label,
                       const std::vector<int>* forced = nullptr);

}  // namespace mmlogic
