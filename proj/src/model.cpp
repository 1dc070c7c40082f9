#include "mmlogic/model.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "mmlogic/evaluation.hpp"

namespace mmlogic {

void ModelConfig::validate() const {
  if (d < 1 || z < 1 || f < 1 || vocab < 1 || k < 1 || g < 1 || layers < 1) {
    throw std::invalid_argument("model config: d, z, f, vocab, k, g and layers must be >= 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("model config: beta must be in (0,1)");
  }
  clause_length(k, beta);  // rejects floor(5k*beta) == 0
  if (layer_set.empty()) {
    throw std::invalid_argument("model config: layer set must not be empty");
  }
  std::set<int> seen;
  for (int l : layer_set) {
    if (l < 0 || l > layers) {
      throw std::invalid_argument("model config: layer " + std::to_string(l) +
                                  " outside [0," + std::to_string(layers) + "]");
    }
    if (!seen.insert(l).second) {
      throw std::invalid_argument("model config: duplicate layer " + std::to_string(l));
    }
  }
  if (labels.size() < 2) {
    throw std::invalid_argument("model config: need at least two labels");
  }
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)), reg_(cfg_.seed) {
  cfg_.validate();
  text_ = TextEncoder(reg_, cfg_.vocab, cfg_.d, cfg_.text_mixing);
  patch_ = PatchEncoder(reg_, cfg_.f, cfg_.d, cfg_.z);
  gcn_ = GcnStack(reg_, cfg_.layers, cfg_.d);
  proj_ = ObjectProjections(reg_, cfg_.d);
  for (MetaPredicateKind kind : kAllKinds) {
    scorers_[static_cast<int>(kind)] = ObjectScorer(reg_, kind, cfg_.d);
  }
  bank_ = CorrelationBank(reg_, cfg_.g, cfg_.d);
  attn_text_ = reg_.weight("attn.text", cfg_.d, 1);
  attn_image_ = reg_.weight("attn.image", cfg_.d, 1);
  sel_input_ = reg_.weight("select.input", cfg_.d, 2 * cfg_.d);
  sel_label_ = reg_.weight("select.label", 4 * cfg_.d, 1);
  truth_w_ = reg_.weight("truth.w", 4 * cfg_.d, 1);
  labels_ = LabelSpace(reg_, cfg_.labels, cfg_.d);
}

int Model::label_index(const std::string& name) const {
  return labels_.index_of(name);
}

ForwardResult Model::forward(const MultimodalSample& sample, const ForwardOptions& opts) {
  const int m = static_cast<int>(sample.tokens.size());
  const int r = cfg_.z * cfg_.z;
  const int num_labels = static_cast<int>(labels_.names.size());

  Tensor t0 = text_.encode(sample.tokens);
  Tensor v0 = patch_.encode(sample.patches);
  CrossModalGraph graph = build_adjacency(sample.dep_edges, m, cfg_.z);
  std::vector<Tensor> h = gcn_forward(concat_rows({t0, v0}), graph.a_norm, gcn_);

  if (opts.capture) opts.capture->layers.assign(cfg_.layer_set.size(), LayerSelections{});
  if (opts.replay && opts.replay->layers.size() != cfg_.layer_set.size()) {
    throw std::invalid_argument("forward: replay selections do not match layer set");
  }

  std::vector<std::vector<Tensor>> clause_truths(num_labels);
  for (std::size_t li = 0; li < cfg_.layer_set.size(); ++li) {
    const int layer = cfg_.layer_set[li];
    Tensor tl = slice_rows(h[layer], 0, m);
    Tensor vl = slice_rows(h[layer], m, m + r);

    auto candidates = build_objects(tl, vl, proj_);
    std::array<ObjectSet, kMetaPredicateCount> sets;
    std::vector<Tensor> object_parts;
    for (MetaPredicateKind kind : kAllKinds) {
      const int ki = static_cast<int>(kind);
      const std::vector<int>* forced =
          opts.replay ? &opts.replay->layers[li].objects[ki] : nullptr;
      sets[ki] = select_topk(candidates[ki], cfg_.k, scorers_[ki], forced);
      if (opts.capture) opts.capture->layers[li].objects[ki] = sets[ki].chosen;
      object_parts.push_back(sets[ki].embed);
    }
    Tensor all_objects = concat_rows(object_parts);  // 5k x d

    auto [text_summary, image_summary] = global_summaries(tl, vl, attn_text_, attn_image_);

    if (opts.capture) opts.capture->layers[li].atoms.resize(num_labels);
    for (int y = 0; y < num_labels; ++y) {
      Tensor label_row = labels_.row(y);

      std::vector<Tensor> parts;
      std::array<Tensor, kMetaPredicateCount> corr_weights;
      for (MetaPredicateKind kind : kAllKinds) {
        const int ki = static_cast<int>(kind);
        parts.push_back(predicate_embeddings(sets[ki], label_row, bank_.corr[ki],
                                             bank_.mix[ki],
                                             opts.trace ? &corr_weights[ki] : nullptr));
      }
      Tensor predicate_embed = concat_rows(parts);  // 5k x d

      Tensor scores = score_atoms(predicate_embed, text_summary, image_summary, label_row,
                                  sel_input_, sel_label_);
      const std::vector<int>* forced_atoms =
          opts.replay ? &opts.replay->layers[li].atoms[y] : nullptr;
      Clause clause = generate_clause(scores, sets, cfg_.k, cfg_.beta, layer, y, forced_atoms);

      std::vector<int> atom_idx;
      for (const ClauseAtom& atom : clause.atoms) atom_idx.push_back(atom.atom_index);
      if (opts.capture) opts.capture->layers[li].atoms[y] = atom_idx;

      Tensor truths = atom_truths(predicate_embed, all_objects, scores, atom_idx,
                                  label_row, truth_w_);
      Tensor conj = conjoin(truths);
      clause_truths[y].push_back(conj);

      if (opts.trace) {
        for (std::size_t a = 0; a < clause.atoms.size(); ++a) {
          ClauseAtom& atom = clause.atoms[a];
          atom.truth = truths.values()[a];
          const Tensor& w = corr_weights[static_cast<int>(atom.kind)];
          atom.correlation_weights.assign(
              w.values().begin() + static_cast<std::size_t>(atom.slot) * w.cols(),
              w.values().begin() + static_cast<std::size_t>(atom.slot + 1) * w.cols());
        }
        clause.conjunction = conj.item();
        opts.trace->clauses.push_back(clause);
      }
    }
  }

  std::vector<Tensor> heads;
  heads.reserve(num_labels);
  for (int y = 0; y < num_labels; ++y) heads.push_back(disjoin(clause_truths[y]));

  ForwardResult res;
  for (const Tensor& head : heads) res.head_truths.push_back(head.item());
  res.probs = truths_to_probs(res.head_truths);
  res.predicted = static_cast<int>(
      std::max_element(res.probs.begin(), res.probs.end()) - res.probs.begin());

  if (opts.with_loss) {
    res.gold = labels_.index_of(sample.label);
    if (res.gold < 0) {
      throw DataError("sample " + sample.id + ": unknown label '" + sample.label + "'");
    }
    res.loss = label_loss(heads, res.gold);
  }

  if (opts.trace) {
    opts.trace->head_truths = res.head_truths;
    opts.trace->probs = res.probs;
    opts.trace->predicted = res.predicted;
  }
  return res;
}

}  // namespace mmlogic
