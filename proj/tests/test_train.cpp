#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mmlogic/evaluation.hpp"
#include "mmlogic/serialize.hpp"
#include "mmlogic/tnorm.hpp"
#include "mmlogic/train.hpp"

using namespace mmlogic;

namespace {

ModelConfig tiny_model_config() {
  ModelConfig mc;
  mc.d = 8;
  mc.z = 2;
  mc.f = 3;
  mc.vocab = 20;
  mc.k = 2;
  mc.g = 3;
  mc.beta = 0.25;
  mc.layers = 2;
  mc.layer_set = {2};
  mc.labels = {"NonRumor", "Rumor"};
  mc.seed = 3;
  return mc;
}

Dataset tiny_dataset(int n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.vocab = 20;
  spec.z = 2;
  spec.f = 3;
  spec.trigger_token = 7;
  spec.noise = 0.0;
  spec.seed = seed;
  spec.min_tokens = 4;
  spec.max_tokens = 6;
  return generate_synthetic(spec, n);
}

}  // namespace

TEST_CASE("adam basics") {
  SUBCASE("zero gradient and zero weight decay leave parameters unchanged") {
    ParamRegistry reg(1);
    Tensor w = reg.weight("w", 2, 2);
    const std::vector<double> before = w.values();
    AdamOptimizer adam(reg, 0.01, 0.0);
    w.zero_grad();
    CHECK(adam.step());
    CHECK(w.values() == before);
  }

  SUBCASE("constant gradient drives the step size to lr") {
    ParamRegistry reg(1);
    Tensor w = reg.zeros("w", 1, 1);
    const double g = 0.03;
    const double lr = 1e-3;
    AdamOptimizer adam(reg, lr, 0.0);
    // with constant g the bias-corrected moments are exactly g and g^2,
    // so each update is lr * g / (|g| + eps)
    double prev = w.values()[0];
    for (int t = 0; t < 5; ++t) {
      w.zero_grad();
      w.grad()[0] = g;
      CHECK(adam.step());
      const double delta = prev - w.values()[0];
      CHECK(delta == doctest::Approx(lr * g / (g + 1e-8)).epsilon(1e-9));
      prev = w.values()[0];
    }
  }

  SUBCASE("one step on f(w) = w^2 decreases f") {
    ParamRegistry reg(1);
    Tensor w = reg.zeros("w", 1, 1);
    w.values()[0] = 1.0;
    AdamOptimizer adam(reg, 0.1, 0.0);
    Tensor loss = mul(w, w);
    backward(loss);
    CHECK(adam.step());
    CHECK(w.values()[0] * w.values()[0] < 1.0);
  }

  SUBCASE("non-finite gradient aborts the step") {
    ParamRegistry reg(1);
    Tensor w = reg.weight("w", 2, 1);
    const std::vector<double> before = w.values();
    AdamOptimizer adam(reg, 0.01, 0.1);
    w.zero_grad();
    w.grad()[0] = std::nan("");
    CHECK_FALSE(adam.step());
    CHECK(w.values() == before);
    CHECK(adam.last_error().find("w") != std::string::npos);
  }

  SUBCASE("weight decay is decoupled") {
    ParamRegistry reg(1);
    Tensor w = reg.zeros("w", 1, 1);
    w.values()[0] = 2.0;
    AdamOptimizer adam(reg, 0.5, 0.1);
    w.zero_grad();  // zero gradient: only the decay term acts
    CHECK(adam.step());
    CHECK(w.values()[0] == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("metrics from confusion") {
  SUBCASE("hand-built confusion [[3,1],[1,3]]") {
    Metrics m = metrics_from_confusion({{3, 1}, {1, 3}});
    CHECK(m.accuracy == doctest::Approx(0.75));
    for (int c = 0; c < 2; ++c) {
      CHECK(m.precision[c] == doctest::Approx(0.75));
      CHECK(m.recall[c] == doctest::Approx(0.75));
      CHECK(m.f1[c] == doctest::Approx(0.75));
    }
  }
  SUBCASE("all correct") {
    Metrics m = metrics_from_confusion({{5, 0}, {0, 5}});
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1[0] == 1.0);
    CHECK(m.f1[1] == 1.0);
  }
  SUBCASE("constant predictor on balanced data") {
    Metrics m = metrics_from_confusion({{5, 0}, {5, 0}});
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.precision[0] == doctest::Approx(0.5));
    CHECK(m.recall[0] == doctest::Approx(1.0));
    CHECK(m.f1[1] == 0.0);  // P + R == 0 for the never-predicted class
  }
}

TEST_CASE("model forward basics") {
  Model model(tiny_model_config());
  Dataset ds = tiny_dataset(4, 13);

  ForwardResult res = model.forward(ds.samples[0]);
  CHECK(res.probs.size() == 2);
  CHECK(res.probs[0] + res.probs[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.head_truths[0] > 0.0);
  CHECK(res.head_truths[0] < 1.0);
  CHECK(res.loss.defined());
  CHECK(std::isfinite(res.loss.item()));

  SUBCASE("trace carries clause structure") {
    SampleTrace trace;
    ForwardOptions opts;
    opts.trace = &trace;
    model.forward(ds.samples[1], opts);
    // one clause per layer-set entry per label, floor(5k*beta)=2 atoms each
    CHECK(trace.clauses.size() == 2);
    for (const Clause& clause : trace.clauses) {
      CHECK(clause.atoms.size() == 2);
      CHECK(clause.layer == 2);
      for (const ClauseAtom& atom : clause.atoms) {
        CHECK(atom.truth > 0.0);
        CHECK(atom.truth < 1.0);
        double weight_sum = 0.0;
        for (double w : atom.correlation_weights) weight_sum += w;
        CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }

  SUBCASE("capture and replay reproduce the same loss") {
    Selections sel;
    ForwardOptions capture;
    capture.capture = &sel;
    const double base = model.forward(ds.samples[2], capture).loss.item();
    ForwardOptions replay;
    replay.replay = &sel;
    CHECK(model.forward(ds.samples[2], replay).loss.item() == base);
  }

  SUBCASE("single-token samples are skipped via b_tt") {
    MultimodalSample s = ds.samples[0];
    s.tokens = {3};
    s.token_surface = {"w3"};
    s.dep_edges.clear();
    CHECK_THROWS_AS(model.forward(s), SampleSkipped);
  }
}

TEST_CASE("full derivation trace is internally consistent") {
  // walks the whole reasoning chain: per-layer clauses, product-t-norm
  // conjunction, disjunction across the layer set, normalized prediction
  ModelConfig mc = tiny_model_config();
  mc.layer_set = {0, 1, 2};
  Model model(mc);
  Dataset ds = tiny_dataset(3, 47);

  SampleTrace trace;
  ForwardOptions opts;
  opts.trace = &trace;
  ForwardResult res = model.forward(ds.samples[0], opts);

  REQUIRE(trace.clauses.size() == 6);  // 3 layers x 2 labels
  std::vector<std::vector<double>> clause_truths(2);
  for (const Clause& clause : trace.clauses) {
    REQUIRE(clause.atoms.size() == 2);
    double prod = 1.0;
    for (const ClauseAtom& atom : clause.atoms) prod *= atom.truth;
    CHECK(clause.conjunction == doctest::Approx(prod).epsilon(1e-12));
    clause_truths[clause.label].push_back(clause.conjunction);
  }
  for (int y = 0; y < 2; ++y) {
    CHECK(res.head_truths[y] ==
          doctest::Approx(tnorm::disj_all(clause_truths[y])).epsilon(1e-12));
  }
  const auto probs = truths_to_probs(res.head_truths);
  CHECK(res.probs[0] == doctest::Approx(probs[0]).epsilon(1e-12));
  CHECK(res.predicted ==
        static_cast<int>(std::max_element(res.probs.begin(), res.probs.end()) -
                         res.probs.begin()));
  // layer-0 clauses read the raw encoder features, deeper ones the GCN output
  CHECK(trace.clauses.front().layer == 0);
  CHECK(trace.clauses.back().layer == 2);
}

TEST_CASE("training is deterministic and restores the best snapshot") {
  Dataset ds = tiny_dataset(30, 29);
  TrainConfig tc;
  tc.lr = 5e-3;
  tc.batch = 8;
  tc.max_epochs = 4;
  tc.patience = 4;
  tc.seed = 17;

  ModelConfig mc = tiny_model_config();
  Model a(mc);
  Model b(mc);
  TrainResult ra = train(a, ds, tc);
  TrainResult rb = train(b, ds, tc);

  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
    CHECK(ra.history[i].val_accuracy == rb.history[i].val_accuracy);
  }
  CHECK(snapshot_params(a.registry()) == snapshot_params(b.registry()));

  // rerunning with max_epochs = best_epoch must land on the same snapshot
  Model c(mc);
  TrainConfig tc2 = tc;
  tc2.max_epochs = ra.best_epoch;
  train(c, ds, tc2);
  CHECK(snapshot_params(c.registry()) == snapshot_params(a.registry()));

  double best_seen = 0.0;
  for (const auto& e : ra.history) best_seen = std::max(best_seen, e.val_accuracy);
  CHECK(ra.best_val_accuracy == best_seen);
}

TEST_CASE("patience zero stops at the first non-improvement") {
  Dataset ds = tiny_dataset(30, 31);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.batch = 8;
  tc.max_epochs = 10;
  tc.patience = 0;
  tc.seed = 23;

  Model model(tiny_model_config());
  TrainResult res = train(model, ds, tc);
  // the run may exhaust max_epochs, but any non-improving epoch must be last
  double best = -1.0;
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const bool improved = res.history[i].val_accuracy > best;
    best = std::max(best, res.history[i].val_accuracy);
    if (!improved) CHECK(i + 1 == res.history.size());
  }
}

TEST_CASE("empty or degenerate splits are rejected") {
  Dataset ds = tiny_dataset(4, 37);
  TrainConfig tc;
  Model model(tiny_model_config());

  Dataset empty;
  empty.meta = ds.meta;
  CHECK_THROWS_AS(train(model, empty, tc), std::invalid_argument);

  Dataset one;
  one.meta = ds.meta;
  one.samples = {ds.samples[0]};
  TrainConfig big_val = tc;
  big_val.val_fraction = 0.9;
  CHECK_THROWS_AS(train(model, one, big_val), std::invalid_argument);
}

TEST_CASE("full-pipeline gradient check on tiny dimensions") {
  ModelConfig mc = tiny_model_config();
  GradCheckReport report = grad_check(mc, 60, 41);
  INFO("worst ", report.worst_param, " rel err ", report.max_rel_error);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("model artifact round trip") {
  const std::string dir = (std::filesystem::temp_directory_path() /
                           ("mmlogic_ser_" + std::to_string(::getpid()))).string();
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/model.bin";

  ModelConfig mc = tiny_model_config();
  Model model(mc);
  Dataset ds = tiny_dataset(3, 43);
  const double before = model.forward(ds.samples[0]).loss.item();

  save_model(model, path);
  Model loaded = load_model(path);
  CHECK(loaded.config().d == mc.d);
  CHECK(loaded.config().labels == mc.labels);
  CHECK(loaded.config().beta == mc.beta);
  const double after = loaded.forward(ds.samples[0]).loss.item();
  CHECK(after == before);  // bitwise identical parameters

  const std::string header = read_model_header(path);
  ModelConfig parsed = config_from_json(header);
  CHECK(parsed.k == mc.k);
  CHECK(parsed.g == mc.g);

  // history writer emits one record per epoch
  save_history({{1, 0.5, 0.25}, {2, 0.25, 0.5}}, dir + "/history.jsonl");
  std::ifstream in(dir + "/history.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("epoch") != std::string::npos);
  }
  CHECK(lines == 2);

  std::filesystem::remove_all(dir);
}
