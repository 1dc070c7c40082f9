#include "mmlogic/evaluation.hpp"

#include <stdexcept>

namespace mmlogic {

Tensor atom_truths(const Tensor& predicate_embed, const Tensor& object_embed,
                   const Tensor& scores, const std::vector<int>& atom_idx,
                   const Tensor& label_row, const Tensor& w_mu) {
  if (atom_idx.empty()) throw std::invalid_argument("atom_truths: no atoms selected");
  const int q = static_cast<int>(atom_idx.size());
  Tensor b = gather_rows(predicate_embed, atom_idx);               // q x d
  Tensor o = gather_rows(object_embed, atom_idx);                  // q x d
  Tensor p = mul(o, broadcast_row(label_row, q));                  // q x d
  Tensor feats = concat_cols({b, p, sub(b, p), mul(b, p)});        // q x 4d
  Tensor logits = matmul(feats, w_mu);                             // q x 1
  Tensor s = gather_rows(scores, atom_idx);                        // q x 1
  return sigmoid(mul(s, logits));
}

Tensor conjoin(const Tensor& truths) {
  if (truths.cols() != 1) {
    throw ShapeError("conjoin: expected a column of truths, got " + shape_str(truths));
  }
  Tensor acc = gather_rows(truths, {0});
  for (int i = 1; i < truths.rows(); ++i) acc = mul(acc, gather_rows(truths, {i}));
  return acc;
}

Tensor disjoin(const std::vector<Tensor>& clause_truths) {
  if (clause_truths.empty()) throw std::invalid_argument("disjoin: empty clause list");
  Tensor acc = clause_truths.front();
  for (std::size_t i = 1; i < clause_truths.size(); ++i) {
    Tensor both_false = mul(affine(acc, -1.0, 1.0), affine(clause_truths[i], -1.0, 1.0));
    acc = affine(both_false, -1.0, 1.0);
  }
  return acc;
}

Tensor label_loss(const std::vector<Tensor>& head_truths, int gold) {
  if (head_truths.size() < 2) throw std::invalid_argument("label_loss: need at least two labels");
  if (gold < 0 || gold >= static_cast<int>(head_truths.size())) {
    throw std::invalid_argument("label_loss: gold label index " + std::to_string(gold) +
                                " out of range");
  }
  Tensor stacked = concat_rows(head_truths);                 // |labels| x 1
  Tensor shifted = affine(stacked, 1.0, kProbEpsilon);
  Tensor gold_truth = gather_rows(shifted, {gold});
  return sub(elem_log(sum_all(shifted)), elem_log(gold_truth));
}

std::vector<double> truths_to_probs(const std::vector<double>& truths) {
  double total = 0.0;
  for (double t : truths) total += t + kProbEpsilon;
  std::vector<double> probs(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) probs[i] = (truths[i] + kProbEpsilon) / total;
  return probs;
}

}  // namespace mmlogic
