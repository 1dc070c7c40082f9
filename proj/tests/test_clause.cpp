#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "mmlogic/clause.hpp"
#include "test_util.hpp"

using namespace mmlogic;
using testutil::random_tensor;

namespace {

ObjectSet fake_objset(std::mt19937_64& rng, MetaPredicateKind kind, int k, int d) {
  ObjectSet set;
  set.kind = kind;
  for (int i = 0; i < k; ++i) {
    set.indices.emplace_back(i, is_pair_kind(kind) ? i + 1 : -1);
    set.chosen.push_back(i);
    set.scores.push_back(0.0);
  }
  set.embed = random_tensor(rng, k, d);
  return set;
}

}  // namespace

TEST_CASE("g = 1 collapses every predicate embedding onto the single row") {
  std::mt19937_64 rng(2);
  const int d = 5, k = 3;
  ObjectSet set = fake_objset(rng, MetaPredicateKind::Token, k, d);
  Tensor label = random_tensor(rng, 1, d);
  Tensor corr = random_tensor(rng, 1, d);
  Tensor mix = random_tensor(rng, 2 * d, d);

  Tensor weights;
  Tensor b = predicate_embeddings(set, label, corr, mix, &weights);
  CHECK(b.rows() == k);
  for (int i = 0; i < k; ++i) {
    CHECK(weights(i, 0) == doctest::Approx(1.0));
    for (int c = 0; c < d; ++c) CHECK(b(i, c) == doctest::Approx(corr(0, c)));
  }
}

TEST_CASE("predicate embeddings are convex combinations of the bank rows") {
  std::mt19937_64 rng(3);
  const int d = 6, k = 4, g = 5;
  ObjectSet set = fake_objset(rng, MetaPredicateKind::TokenPatch, k, d);
  Tensor label = random_tensor(rng, 1, d);
  Tensor corr = random_tensor(rng, g, d);
  Tensor mix = random_tensor(rng, 2 * d, d);

  Tensor weights;
  Tensor b = predicate_embeddings(set, label, corr, mix, &weights);
  CHECK(weights.rows() == k);
  CHECK(weights.cols() == g);
  for (int i = 0; i < k; ++i) {
    double sum = 0.0;
    for (int j = 0; j < g; ++j) {
      CHECK(weights(i, j) >= 0.0);
      sum += weights(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // reconstruct the row from the weights
    for (int c = 0; c < d; ++c) {
      double rebuilt = 0.0;
      for (int j = 0; j < g; ++j) rebuilt += weights(i, j) * corr(j, c);
      CHECK(std::abs(rebuilt - b(i, c)) < 1e-9);
    }
  }
}

TEST_CASE("stacking five kinds with k = 5 yields 25 predicate rows") {
  std::mt19937_64 rng(4);
  const int d = 4, k = 5, g = 3;
  Tensor label = random_tensor(rng, 1, d);
  std::vector<Tensor> parts;
  for (MetaPredicateKind kind : kAllKinds) {
    ObjectSet set = fake_objset(rng, kind, k, d);
    parts.push_back(predicate_embeddings(set, label, random_tensor(rng, g, d),
                                         random_tensor(rng, 2 * d, d)));
  }
  CHECK(concat_rows(parts).rows() == 25);
}

TEST_CASE("global summaries") {
  std::mt19937_64 rng(6);
  const int d = 4;
  Tensor w_text = random_tensor(rng, d, 1);
  Tensor w_image = random_tensor(rng, d, 1);

  SUBCASE("single token is returned as-is") {
    Tensor tokens = random_tensor(rng, 1, d);
    Tensor patches = random_tensor(rng, 3, d);
    auto [t_sum, v_sum] = global_summaries(tokens, patches, w_text, w_image);
    CHECK(t_sum.rows() == d);
    for (int c = 0; c < d; ++c) CHECK(t_sum(c, 0) == doctest::Approx(tokens(0, c)));
  }

  SUBCASE("identical rows collapse to that row") {
    Tensor tokens(3, d);
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < d; ++c) tokens.mut(i, c) = 0.3 * (c + 1);
    auto [t_sum, v_sum] = global_summaries(tokens, random_tensor(rng, 2, d), w_text, w_image);
    for (int c = 0; c < d; ++c) CHECK(t_sum(c, 0) == doctest::Approx(0.3 * (c + 1)));
  }

  SUBCASE("zero attention weights give the uniform average") {
    Tensor tokens = random_tensor(rng, 4, d);
    Tensor zero_w(d, 1);
    auto [t_sum, v_sum] = global_summaries(tokens, random_tensor(rng, 2, d), zero_w, w_image);
    for (int c = 0; c < d; ++c) {
      double mean = 0.0;
      for (int i = 0; i < 4; ++i) mean += tokens(i, c);
      mean /= 4.0;
      CHECK(t_sum(c, 0) == doctest::Approx(mean));
    }
  }
}

TEST_CASE("atom scores form a probability vector tracking the attention product") {
  std::mt19937_64 rng(8);
  const int d = 6, n = 10;
  Tensor b = random_tensor(rng, n, d);
  Tensor t_sum = random_tensor(rng, d, 1);
  Tensor v_sum = random_tensor(rng, d, 1);
  Tensor label = random_tensor(rng, 1, d);
  Tensor w_input = random_tensor(rng, d, 2 * d);
  Tensor w_label = random_tensor(rng, 4 * d, 1);

  Tensor s = score_atoms(b, t_sum, v_sum, label, w_input, w_label);
  CHECK(s.rows() == n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    CHECK(s(i, 0) >= 0.0);
    sum += s(i, 0);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  // recompute the two attention stages with the same formulas; the final
  // sparsemax is monotone, so the ordering must follow the product
  Tensor context = concat_rows({t_sum, v_sum});
  Tensor s_input = sparsemax(matmul(matmul(b, w_input), context), Axis::PerCol);
  Tensor labels = broadcast_row(label, n);
  Tensor s_label = sparsemax(
      matmul(concat_cols({b, labels, sub(b, labels), mul(b, labels)}), w_label), Axis::PerCol);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double pi = s_input(i, 0) * s_label(i, 0);
      const double pj = s_input(j, 0) * s_label(j, 0);
      if (pi > pj) CHECK(s(i, 0) >= s(j, 0));
    }
  }
}

TEST_CASE("identical predicate rows give uniform scores") {
  std::mt19937_64 rng(10);
  const int d = 5, n = 8;
  Tensor row = random_tensor(rng, 1, d);
  Tensor b = broadcast_row(row, n);
  Tensor s = score_atoms(b, random_tensor(rng, d, 1), random_tensor(rng, d, 1),
                         random_tensor(rng, 1, d), random_tensor(rng, d, 2 * d),
                         random_tensor(rng, 4 * d, 1));
  for (int i = 0; i < n; ++i) CHECK(s(i, 0) == doctest::Approx(1.0 / n).epsilon(1e-9));
}

TEST_CASE("clause length") {
  CHECK(clause_length(5, 0.1) == 2);   // floor(25 * 0.1)
  CHECK(clause_length(2, 0.25) == 2);  // floor(10 * 0.25)
  CHECK(clause_length(5, 0.04) == 1);  // 25 * 0.04 is exactly 1
  CHECK_THROWS_AS(clause_length(5, 0.03), std::invalid_argument);
  CHECK_THROWS_AS(clause_length(1, 0.15), std::invalid_argument);
}

TEST_CASE("clause generation") {
  std::mt19937_64 rng(12);
  const int d = 4, k = 5;
  std::array<ObjectSet, kMetaPredicateCount> sets;
  for (MetaPredicateKind kind : kAllKinds) {
    sets[static_cast<int>(kind)] = fake_objset(rng, kind, k, d);
  }

  SUBCASE("defaults pick two atoms") {
    Tensor scores = random_tensor(rng, 5 * k, 1, 0.0, 1.0);
    Clause clause = generate_clause(scores, sets, k, 0.1, 2, 1);
    CHECK(clause.atoms.size() == 2);
    CHECK(clause.layer == 2);
    CHECK(clause.label == 1);
    for (const ClauseAtom& atom : clause.atoms) {
      CHECK(atom.atom_index / k == static_cast<int>(atom.kind));
      CHECK(atom.slot == atom.atom_index % k);
    }
  }

  SUBCASE("one-hot scores select that atom first") {
    Tensor scores(5 * k, 1);
    scores.mut(17, 0) = 1.0;
    Clause clause = generate_clause(scores, sets, k, 0.1, 0, 0);
    CHECK(clause.atoms[0].atom_index == 17);
    CHECK(clause.atoms[0].kind == MetaPredicateKind::PatchPatch);
    CHECK(clause.atoms[0].slot == 2);
    CHECK(clause.atoms[0].score == 1.0);
    // tie among the zeros: lowest index next
    CHECK(clause.atoms[1].atom_index == 0);
  }

  SUBCASE("selection is invariant under strictly monotone rescaling") {
    Tensor scores = random_tensor(rng, 5 * k, 1, 0.0, 1.0);
    Clause base = generate_clause(scores, sets, k, 0.2, 0, 0);
    Tensor rescaled(5 * k, 1);
    for (int i = 0; i < 5 * k; ++i) {
      const double v = scores(i, 0);
      rescaled.mut(i, 0) = 0.25 + 2.0 * v * v * v;  // strictly monotone on [0,1]
    }
    Clause scaled = generate_clause(rescaled, sets, k, 0.2, 0, 0);
    std::set<int> lhs, rhs;
    for (const auto& atom : base.atoms) lhs.insert(atom.atom_index);
    for (const auto& atom : scaled.atoms) rhs.insert(atom.atom_index);
    CHECK(lhs == rhs);
  }

  SUBCASE("clause length is exact for random configurations") {
    std::uniform_real_distribution<double> beta_dist(0.05, 0.95);
    for (int trial = 0; trial < 25; ++trial) {
      const int kk = 1 + static_cast<int>(rng() % 6);
      double beta = beta_dist(rng);
      if (static_cast<int>(std::floor(5.0 * kk * beta)) < 1) {
        beta = 0.5;
      }
      std::array<ObjectSet, kMetaPredicateCount> trial_sets;
      for (MetaPredicateKind kind : kAllKinds) {
        trial_sets[static_cast<int>(kind)] = fake_objset(rng, kind, kk, d);
      }
      Tensor scores = random_tensor(rng, 5 * kk, 1, 0.0, 1.0);
      Clause clause = generate_clause(scores, trial_sets, kk, beta, 1, 0);
      CHECK(static_cast<int>(clause.atoms.size()) ==
            static_cast<int>(std::floor(5.0 * kk * beta)));
    }
  }
}

TEST_CASE("label space lookups") {
  ParamRegistry reg(1);
  LabelSpace space(reg, {"NonRumor", "Rumor"}, 4);
  CHECK(space.index_of("Rumor") == 1);
  CHECK(space.index_of("bogus") == -1);
  CHECK(space.row(0).rows() == 1);
  CHECK_THROWS_AS(LabelSpace(reg, {"only"}, 4), std::invalid_argument);
}
