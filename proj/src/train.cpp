#include "mmlogic/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "mmlogic/evaluation.hpp"

namespace mmlogic {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw std::invalid_argument("train config: lr must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight decay must be >= 0");
  if (batch < 1) throw std::invalid_argument("train config: batch size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("train config: max epochs must be >= 1");
  if (patience < 0) throw std::invalid_argument("train config: patience must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("train config: val fraction must be in (0,1)");
  }
  if (grad_clip < 0.0) throw std::invalid_argument("train config: grad clip must be >= 0");
}

double clip_gradients(ParamRegistry& reg, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : reg.items()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : reg.items()) {
      Tensor tensor = t;
      for (double& g : tensor.grad()) g *= scale;
    }
  }
  return norm;
}

AdamOptimizer::AdamOptimizer(ParamRegistry& reg, double lr, double weight_decay)
    : reg_(reg), lr_(lr), weight_decay_(weight_decay) {
  for (const auto& [name, t] : reg.items()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

bool AdamOptimizer::step() {
  const auto& items = reg_.items();
  for (const auto& [name, t] : items) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        last_error_ = "non-finite gradient in parameter '" + name + "'; step aborted";
        std::cerr << "adam: " << last_error_ << "\n";
        return false;
      }
    }
  }
  ++t_;
  const double corr1 = 1.0 - std::pow(beta1_, t_);
  const double corr2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t p = 0; p < items.size(); ++p) {
    Tensor t = items[p].second;
    std::vector<double>& w = t.values();
    const std::vector<double>& g = t.grad();
    std::vector<double>& m = m_[p];
    std::vector<double>& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= lr_ * weight_decay_ * w[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / corr1;
      const double v_hat = v[i] / corr2;
      w[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
  return true;
}

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& reg) {
  std::vector<std::vector<double>> snap;
  for (const auto& [name, t] : reg.items()) snap.push_back(t.values());
  return snap;
}

void restore_params(ParamRegistry& reg, const std::vector<std::vector<double>>& snapshot) {
  const auto& items = reg.items();
  if (snapshot.size() != items.size()) {
    throw std::invalid_argument("restore_params: snapshot layout mismatch");
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor t = items[i].second;
    if (snapshot[i].size() != t.size()) {
      throw std::invalid_argument("restore_params: size mismatch for '" + items[i].first + "'");
    }
    t.values() = snapshot[i];
  }
}

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion) {
  const std::size_t classes = confusion.size();
  Metrics metrics;
  metrics.confusion = confusion;
  metrics.precision.assign(classes, 0.0);
  metrics.recall.assign(classes, 0.0);
  metrics.f1.assign(classes, 0.0);
  long total = 0;
  long correct = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t p = 0; p < classes; ++p) total += confusion[c][p];
    correct += confusion[c][c];
  }
  metrics.evaluated = static_cast<int>(total);
  metrics.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    long tp = confusion[c][c];
    long fp = 0;
    long fn = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    metrics.precision[c] = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    metrics.recall[c] = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double pr = metrics.precision[c] + metrics.recall[c];
    metrics.f1[c] = pr > 0.0 ? 2.0 * metrics.precision[c] * metrics.recall[c] / pr : 0.0;
  }
  return metrics;
}

namespace {

double accuracy_on(Model& model, const Dataset& dataset, const std::vector<int>& subset,
                   int* skipped) {
  long correct = 0;
  long seen = 0;
  ForwardOptions opts;
  opts.with_loss = false;
  for (int idx : subset) {
    const MultimodalSample& s = dataset.samples[idx];
    const int gold = model.label_index(s.label);
    if (gold < 0) throw DataError("sample " + s.id + ": unknown label '" + s.label + "'");
    try {
      ForwardResult res = model.forward(s, opts);
      correct += (res.predicted == gold) ? 1 : 0;
      ++seen;
    } catch (const SampleSkipped& e) {
      if (skipped) ++*skipped;
      std::cerr << "skipping sample " << s.id << ": " << e.what() << "\n";
    }
  }
  return seen > 0 ? static_cast<double>(correct) / seen : 0.0;
}

}  // namespace

TrainResult train(Model& model, const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("train: dataset is empty");
  if (dataset.meta.labels != model.config().labels) {
    throw std::invalid_argument("train: dataset label space does not match the model");
  }

  const int n = static_cast<int>(dataset.samples.size());
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const int val_count = std::max(1, static_cast<int>(std::lround(n * config.val_fraction)));
  if (val_count >= n) {
    throw std::invalid_argument("train: dataset too small to hold out a validation split");
  }
  std::vector<int> val_idx(order.begin(), order.begin() + val_count);
  std::vector<int> train_idx(order.begin() + val_count, order.end());

  AdamOptimizer adam(model.registry(), config.lr, config.weight_decay);
  TrainResult result;
  std::vector<std::vector<double>> best = snapshot_params(model.registry());
  double best_acc = -1.0;
  int best_epoch = 0;
  int non_improving = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);

    double loss_sum = 0.0;
    long loss_count = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(train_idx.size(),
                                       start + static_cast<std::size_t>(config.batch));
      std::vector<Tensor> losses;
      for (std::size_t i = start; i < end; ++i) {
        const MultimodalSample& s = dataset.samples[train_idx[i]];
        try {
          losses.push_back(model.forward(s).loss);
        } catch (const SampleSkipped& e) {
          ++result.skipped_samples;
          std::cerr << "skipping sample " << s.id << ": " << e.what() << "\n";
        }
      }
      if (losses.empty()) continue;
      Tensor batch_loss = mean_all(concat_rows(losses));
      backward(batch_loss);
      if (config.grad_clip > 0.0) clip_gradients(model.registry(), config.grad_clip);
      adam.step();
      model.registry().zero_grads();
      loss_sum += batch_loss.item() * static_cast<double>(losses.size());
      loss_count += static_cast<long>(losses.size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    stats.val_accuracy = accuracy_on(model, dataset, val_idx, &result.skipped_samples);
    result.history.push_back(stats);

    if (stats.val_accuracy > best_acc) {
      best_acc = stats.val_accuracy;
      best_epoch = epoch;
      best = snapshot_params(model.registry());
      non_improving = 0;
    } else {
      ++non_improving;
      if (non_improving > config.patience) break;
    }
  }

  restore_params(model.registry(), best);
  result.best_val_accuracy = best_acc;
  result.best_epoch = best_epoch;
  return result;
}

Metrics evaluate(Model& model, const Dataset& dataset) {
  const std::size_t classes = model.labels().names.size();
  std::vector<std::vector<long>> confusion(classes, std::vector<long>(classes, 0));
  int skipped = 0;
  ForwardOptions opts;
  opts.with_loss = false;
  for (const MultimodalSample& s : dataset.samples) {
    const int gold = model.label_index(s.label);
    if (gold < 0) throw DataError("sample " + s.id + ": unknown label '" + s.label + "'");
    try {
      ForwardResult res = model.forward(s, opts);
      ++confusion[gold][res.predicted];
    } catch (const SampleSkipped& e) {
      ++skipped;
      std::cerr << "skipping sample " << s.id << ": " << e.what() << "\n";
    }
  }
  Metrics metrics = metrics_from_confusion(confusion);
  metrics.skipped = skipped;
  return metrics;
}

void save_history(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history file " + path);
  out.precision(17);
  for (const EpochStats& e : history) {
    out << "{\"epoch\":" << e.epoch << ",\"train_loss\":" << e.train_loss
        << ",\"val_accuracy\":" << e.val_accuracy << "}\n";
  }
}

GradCheckReport grad_check(const ModelConfig& config, int n_probes,
                           std::uint64_t probe_seed, double step, double tolerance) {
  ModelConfig cfg = config;
  if (cfg.labels.empty()) cfg.labels = {"NonRumor", "Rumor"};
  Model model(cfg);

  // deterministic probe sample
  std::mt19937_64 rng(probe_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MultimodalSample sample;
  sample.id = "gradcheck";
  const int m = 4;
  for (int i = 0; i < m; ++i) {
    sample.tokens.push_back(1 + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                    std::max(1, cfg.vocab - 1))));
  }
  sample.dep_edges = window_edges(m, 2);
  sample.patches.assign(static_cast<std::size_t>(cfg.z) * cfg.z,
                        std::vector<double>(cfg.f));
  for (auto& row : sample.patches) {
    for (double& v : row) v = gauss(rng);
  }
  sample.label = cfg.labels[rng() % cfg.labels.size()];

  // capture the hard selections once, then keep them frozen
  Selections frozen;
  ForwardOptions capture_opts;
  capture_opts.capture = &frozen;
  model.registry().zero_grads();
  ForwardResult base = model.forward(sample, capture_opts);
  backward(base.loss);

  std::vector<std::vector<double>> analytic;
  for (const auto& [name, t] : model.registry().items()) analytic.push_back(t.grad());

  ForwardOptions replay_opts;
  replay_opts.replay = &frozen;
  auto loss_at = [&]() { return model.forward(sample, replay_opts).loss.item(); };

  const auto& items = model.registry().items();
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (const auto& [name, t] : items) {
    sizes.push_back(t.size());
    total += t.size();
  }

  GradCheckReport report;
  report.probes = n_probes;
  for (int probe = 0; probe < n_probes; ++probe) {
    std::size_t flat = rng() % total;
    std::size_t p = 0;
    while (flat >= sizes[p]) {
      flat -= sizes[p];
      ++p;
    }
    Tensor t = items[p].second;
    const double saved = t.values()[flat];
    t.values()[flat] = saved + step;
    const double plus = loss_at();
    t.values()[flat] = saved - step;
    const double minus = loss_at();
    t.values()[flat] = saved;

    const double numeric = (plus - minus) / (2.0 * step);
    const double a = analytic[p][flat];
    // absolute floor keeps finite-difference roundoff (~|loss|*eps/step) from
    // dominating the ratio when both gradients are essentially zero
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    const double err = std::abs(a - numeric) / denom;
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_param = items[p].first;
      report.worst_index = static_cast<int>(flat);
      report.analytic_at_worst = a;
      report.numeric_at_worst = numeric;
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace mmlogic
