#pragma once

#include <vector>

#include "mmlogic/tensor.hpp"

namespace mmlogic {

inline constexpr double kProbEpsilon = 1e-8;

// Truth of the selected atoms: sigmoid(s * [b, p, b-p, b o p] W_mu) with
// p = o o y. Rows of predicate_embed / object_embed / scores are indexed by
// atom_idx; returns one truth per atom (q x 1).
Tensor atom_truths(const Tensor& predicate_embed, const Tensor& object_embed,
                   const Tensor& scores, const std::vector<int>& atom_idx,
                   const Tensor& label_row, const Tensor& w_mu);

// Product t-norm conjunction of a column of truths; left fold, 1 x 1 result.
Tensor conjoin(const Tensor& truths);

// Product t-norm disjunction of scalar clause truths; left fold.
Tensor disjoin(const std::vector<Tensor>& clause_truths);

// -log p(gold) with p(y) = (mu_y + eps) / sum_y' (mu_y' + eps).
Tensor label_loss(const std::vector<Tensor>& head_truths, int gold);

// The same normalization on plain values, for prediction and reports.
std::vector<double> truths_to_probs(const std::vector<double>& truths);

}  // namespace mmlogic
