#include "mmlogic/objects.hpp"

#include <algorithm>
#include <numeric>

namespace mmlogic {

const char* predicate_tag(MetaPredicateKind kind) {
  switch (kind) {
    case MetaPredicateKind::Token: return "b_t";
    case MetaPredicateKind::Patch: return "b_v";
    case MetaPredicateKind::TokenToken: return "b_tt";
    case MetaPredicateKind::PatchPatch: return "b_vv";
    case MetaPredicateKind::TokenPatch: return "b_tv";
  }
  return "?";
}

MetaPredicateKind predicate_from_tag(const std::string& tag) {
  for (MetaPredicateKind kind : kAllKinds) {
    if (tag == predicate_tag(kind)) return kind;
  }
  throw std::invalid_argument("unknown meta-predicate tag '" + tag + "'");
}

bool is_pair_kind(MetaPredicateKind kind) {
  return kind == MetaPredicateKind::TokenToken || kind == MetaPredicateKind::PatchPatch ||
         kind == MetaPredicateKind::TokenPatch;
}

long candidate_count(MetaPredicateKind kind, int m, int r) {
  switch (kind) {
    case MetaPredicateKind::Token: return m;
    case MetaPredicateKind::Patch: return r;
    case MetaPredicateKind::TokenToken: return static_cast<long>(m) * (m - 1);
    case MetaPredicateKind::PatchPatch: return static_cast<long>(r) * (r - 1);
    case MetaPredicateKind::TokenPatch: return static_cast<long>(m) * r;
  }
  return 0;
}

ObjectProjections::ObjectProjections(ParamRegistry& reg, int d) {
  for (MetaPredicateKind kind : kAllKinds) {
    const int in = is_pair_kind(kind) ? 4 * d : d;
    w[static_cast<int>(kind)] =
        reg.weight(std::string("obj.") + predicate_tag(kind) + ".w", in, d);
  }
}

ObjectScorer::ObjectScorer(ParamRegistry& reg, MetaPredicateKind kind, int d) {
  const std::string base = std::string("obj.") + predicate_tag(kind) + ".score.";
  w1 = reg.weight(base + "w1", d, d);
  b1 = reg.zeros(base + "b1", 1, d);
  w2 = reg.weight(base + "w2", d, 1);
  b2 = reg.zeros(base + "b2", 1, 1);
}

Tensor ObjectScorer::score(const Tensor& candidates) const {
  Tensor hidden = relu(add_rowvec(matmul(candidates, w1), b1));
  return add_rowvec(matmul(hidden, w2), b2);
}

namespace {

// [a_i, b_j, a_i - b_j, a_i o b_j] W for all (i, j) in the index lists.
Tensor pair_objects(const Tensor& a, const Tensor& b, const std::vector<int>& ii,
                    const std::vector<int>& jj, const Tensor& w) {
  Tensor left = gather_rows(a, ii);
  Tensor right = gather_rows(b, jj);
  Tensor feats = concat_cols({left, right, sub(left, right), mul(left, right)});
  return matmul(feats, w);
}

}  // namespace

std::array<ObjectCandidates, kMetaPredicateCount> build_objects(
    const Tensor& tokens, const Tensor& patches, const ObjectProjections& proj) {
  if (tokens.cols() != patches.cols()) {
    throw ShapeError("build_objects: token and patch widths differ, " + shape_str(tokens) +
                     " vs " + shape_str(patches));
  }
  const int m = tokens.rows();
  const int r = patches.rows();
  std::array<ObjectCandidates, kMetaPredicateCount> out;

  auto& o_t = out[static_cast<int>(MetaPredicateKind::Token)];
  o_t.kind = MetaPredicateKind::Token;
  for (int i = 0; i < m; ++i) o_t.index.emplace_back(i, -1);
  o_t.embed = matmul(tokens, proj.w[static_cast<int>(MetaPredicateKind::Token)]);

  auto& o_v = out[static_cast<int>(MetaPredicateKind::Patch)];
  o_v.kind = MetaPredicateKind::Patch;
  for (int q = 0; q < r; ++q) o_v.index.emplace_back(q, -1);
  o_v.embed = matmul(patches, proj.w[static_cast<int>(MetaPredicateKind::Patch)]);

  auto& o_tt = out[static_cast<int>(MetaPredicateKind::TokenToken)];
  o_tt.kind = MetaPredicateKind::TokenToken;
  {
    std::vector<int> ii, jj;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) {
          ii.push_back(i);
          jj.push_back(j);
          o_tt.index.emplace_back(i, j);
        }
    if (!ii.empty()) {
      o_tt.embed = pair_objects(tokens, tokens, ii, jj,
                                proj.w[static_cast<int>(MetaPredicateKind::TokenToken)]);
    }
  }

  auto& o_vv = out[static_cast<int>(MetaPredicateKind::PatchPatch)];
  o_vv.kind = MetaPredicateKind::PatchPatch;
  {
    std::vector<int> ii, jj;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        if (i != j) {
          ii.push_back(i);
          jj.push_back(j);
          o_vv.index.emplace_back(i, j);
        }
    if (!ii.empty()) {
      o_vv.embed = pair_objects(patches, patches, ii, jj,
                                proj.w[static_cast<int>(MetaPredicateKind::PatchPatch)]);
    }
  }

  auto& o_tv = out[static_cast<int>(MetaPredicateKind::TokenPatch)];
  o_tv.kind = MetaPredicateKind::TokenPatch;
  {
    std::vector<int> ii, jj;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < r; ++j) {
        ii.push_back(i);
        jj.push_back(j);
        o_tv.index.emplace_back(i, j);
      }
    o_tv.embed = pair_objects(tokens, patches, ii, jj,
                              proj.w[static_cast<int>(MetaPredicateKind::TokenPatch)]);
  }

  return out;
}

ObjectSet select_topk(const ObjectCandidates& candidates, int k,
                      const ObjectScorer& scorer, const std::vector<int>* forced) {
  const int n = static_cast<int>(candidates.index.size());
  if (n == 0) {
    throw SampleSkipped(std::string("no candidate objects for ") +
                        predicate_tag(candidates.kind));
  }
  if (k < 1) throw std::invalid_argument("select_topk: k must be >= 1");

  Tensor score_col = scorer.score(candidates.embed);  // n x 1

  std::vector<int> chosen;
  if (forced) {
    chosen = *forced;
    if (static_cast<int>(chosen.size()) != k) {
      throw std::invalid_argument("select_topk: forced selection size mismatch");
    }
  } else {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::vector<double>& s = score_col.values();
    std::sort(order.begin(), order.end(), [&s](int lhs, int rhs) {
      if (s[lhs] != s[rhs]) return s[lhs] > s[rhs];
      return lhs < rhs;
    });
    chosen.assign(order.begin(), order.begin() + std::min(k, n));
    while (static_cast<int>(chosen.size()) < k) chosen.push_back(order.front());
  }

  ObjectSet set;
  set.kind = candidates.kind;
  set.chosen = chosen;
  for (int c : chosen) {
    set.indices.push_back(candidates.index[c]);
    set.scores.push_back(score_col.values()[c]);
  }
  Tensor picked_scores = gather_rows(score_col, chosen);          // k x 1
  Tensor gate = broadcast_col(sigmoid(picked_scores), candidates.embed.cols());
  set.embed = mul(gather_rows(candidates.embed, chosen), gate);   // k x d
  return set;
}

}  // namespace mmlogic
