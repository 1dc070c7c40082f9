#include "mmlogic/clause.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmlogic {

CorrelationBank::CorrelationBank(ParamRegistry& reg, int g_count, int d) : g(g_count) {
  if (g_count < 1) throw std::invalid_argument("correlation bank: g must be >= 1");
  for (MetaPredicateKind kind : kAllKinds) {
    const std::string base = std::string("bank.") + predicate_tag(kind) + ".";
    corr[static_cast<int>(kind)] = reg.embedding(base + "c", g_count, d);
    mix[static_cast<int>(kind)] = reg.weight(base + "we", 2 * d, d);
  }
}

LabelSpace::LabelSpace(ParamRegistry& reg, std::vector<std::string> label_names, int d)
    : names(std::move(label_names)) {
  if (names.size() < 2) throw std::invalid_argument("label space: need at least two labels");
  embed = reg.embedding("label.embed", static_cast<int>(names.size()), d);
}

int LabelSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Tensor predicate_embeddings(const ObjectSet& objset, const Tensor& label_row,
                            const Tensor& corr, const Tensor& mix, Tensor* weights_out) {
  const int k = objset.embed.rows();
  Tensor feats = concat_cols({objset.embed, broadcast_row(label_row, k)});  // k x 2d
  Tensor logits = matmul(matmul(feats, mix), transpose(corr));              // k x g
  Tensor weights = sparsemax(logits, Axis::PerRow);
  if (weights_out) *weights_out = weights;
  return matmul(weights, corr);  // k x d
}

std::pair<Tensor, Tensor> global_summaries(const Tensor& tokens, const Tensor& patches,
                                           const Tensor& w_text, const Tensor& w_image) {
  Tensor text_attn = softmax(matmul(tokens, w_text), Axis::PerCol);    // m x 1
  Tensor image_attn = softmax(matmul(patches, w_image), Axis::PerCol); // r x 1
  return {matmul(transpose(tokens), text_attn), matmul(transpose(patches), image_attn)};
}

Tensor score_atoms(const Tensor& predicate_embed, const Tensor& text_summary,
                   const Tensor& image_summary, const Tensor& label_row,
                   const Tensor& w_input, const Tensor& w_label) {
  const int n = predicate_embed.rows();
  Tensor context = concat_rows({text_summary, image_summary});  // 2d x 1
  Tensor s_input = sparsemax(matmul(matmul(predicate_embed, w_input), context), Axis::PerCol);
  Tensor labels = broadcast_row(label_row, n);
  Tensor label_feats = concat_cols({predicate_embed, labels, sub(predicate_embed, labels),
                                    mul(predicate_embed, labels)});  // n x 4d
  Tensor s_label = sparsemax(matmul(label_feats, w_label), Axis::PerCol);
  return sparsemax(mul(s_input, s_label), Axis::PerCol);
}

int clause_length(int k, double beta) {
  const int q = static_cast<int>(std::floor(5.0 * k * beta));
  if (q < 1) {
    throw std::invalid_argument("clause length floor(5k*beta) is zero (k=" +
                                std::to_string(k) + ", beta=" + std::to_string(beta) + ")");
  }
  return q;
}

Clause generate_clause(const Tensor& scores,
                       const std::array<ObjectSet, kMetaPredicateCount>& objsets,
                       int k, double beta, int layer, int label,
                       const std::vector<int>* forced) {
  const int n = scores.rows();
  if (n != 5 * k || scores.cols() != 1) {
    throw ShapeError("generate_clause: expected " + std::to_string(5 * k) +
                     "x1 score vector, got " + shape_str(scores));
  }
  const int q = clause_length(k, beta);

  std::vector<int> picked;
  if (forced) {
    picked = *forced;
    if (static_cast<int>(picked.size()) != q) {
      throw std::invalid_argument("generate_clause: forced selection size mismatch");
    }
  } else {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::vector<double>& s = scores.values();
    std::sort(order.begin(), order.end(), [&s](int lhs, int rhs) {
      if (s[lhs] != s[rhs]) return s[lhs] > s[rhs];
      return lhs < rhs;
    });
    picked.assign(order.begin(), order.begin() + q);
  }

  Clause clause;
  clause.layer = layer;
  clause.label = label;
  for (int a : picked) {
    ClauseAtom atom;
    atom.atom_index = a;
    atom.kind = static_cast<MetaPredicateKind>(a / k);
    atom.slot = a % k;
    atom.constants = objsets[a / k].indices[atom.slot];
    atom.score = scores.values()[a];
    clause.atoms.push_back(atom);
  }
  return clause;
}

}  // namespace mmlogic
