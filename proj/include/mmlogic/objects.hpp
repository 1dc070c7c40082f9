#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmlogic/param_registry.hpp"
#include "mmlogic/tensor.hpp"

namespace mmlogic {

enum class MetaPredicateKind {
  Token = 0,       // b_t:  token t is related to label y
  Patch = 1,       // b_v:  image patch v is related to label y
  TokenToken = 2,  // b_tt: a pair of tokens is related to label y
  PatchPatch = 3,  // b_vv: a pair of patches is related to label y
  TokenPatch = 4,  // b_tv: a token/patch pair is related to label y
};

inline constexpr int kMetaPredicateCount = 5;
inline constexpr std::array<MetaPredicateKind, kMetaPredicateCount> kAllKinds = {
    MetaPredicateKind::Token, MetaPredicateKind::Patch, MetaPredicateKind::TokenToken,
    MetaPredicateKind::PatchPatch, MetaPredicateKind::TokenPatch};

const char* predicate_tag(MetaPredicateKind kind);  // "b_t", "b_v", ...
MetaPredicateKind predicate_from_tag(const std::string& tag);
bool is_pair_kind(MetaPredicateKind kind);
long candidate_count(MetaPredicateKind kind, int m, int r);

// Raised when a sample cannot produce objects for some meta-predicate
// (e.g. a single-token text has no token pairs). Callers skip the sample.
class SampleSkipped : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Object projections of the five meta-predicates: d x d for the unary kinds,
// 4d x d for the pair kinds.
struct ObjectProjections {
  std::array<Tensor, kMetaPredicateCount> w;

  ObjectProjections() = default;
  ObjectProjections(ParamRegistry& reg, int d);
};

// Importance scorer per meta-predicate: linear + ReLU + linear-to-scalar.
struct ObjectScorer {
  Tensor w1, b1, w2, b2;

  ObjectScorer() = default;
  ObjectScorer(ParamRegistry& reg, MetaPredicateKind kind, int d);

  Tensor score(const Tensor& candidates) const;  // n x d -> n x 1
};

// All instantiations of one meta-predicate for one GCN layer.
// index[i] is (token or patch index, second index or -1 for unary kinds).
struct ObjectCandidates {
  MetaPredicateKind kind;
  std::vector<std::pair<int, int>> index;
  Tensor embed;  // n x d
};

// The k constants retained for one meta-predicate, with embeddings gated by
// sigmoid(importance score).
struct ObjectSet {
  MetaPredicateKind kind;
  std::vector<std::pair<int, int>> indices;  // k entries
  std::vector<int> chosen;                   // candidate positions, k entries
  std::vector<double> scores;                // raw importance scores, k entries
  Tensor embed;                              // k x d
};

std::array<ObjectCandidates, kMetaPredicateCount> build_objects(
    const Tensor& tokens, const Tensor& patches, const ObjectProjections& proj);

// Keeps the k highest-scoring candidates (ties broken by lower candidate
// index); pads by repeating the best candidate when fewer exist. `forced`
// replays a previously captured selection.
ObjectSet select_topk(const ObjectCandidates& candidates, int k,
                      const ObjectScorer& scorer,
                      const std::vector<int>* forced = nullptr);

}  // namespace mmlogic
