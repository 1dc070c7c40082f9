#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmlogic/data.hpp"
#include "mmlogic/model.hpp"
#include "mmlogic/param_registry.hpp"

namespace mmlogic {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 5e-4;
  int batch = 32;
  int max_epochs = 20;
  int patience = 5;
  double val_fraction = 0.1;
  double grad_clip = 1.0;  // global-norm clip before the Adam step; 0 disables
  std::uint64_t seed = 1;

  void validate() const;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_gradients(ParamRegistry& reg, double max_norm);

// Adam with decoupled weight decay (w -= lr*wd*w before the Adam delta).
class AdamOptimizer {
 public:
  AdamOptimizer(ParamRegistry& reg, double lr, double weight_decay);

  // Applies one update from the accumulated gradients. Returns false and
  // emits a diagnostic without touching the parameters when any gradient
  // is non-finite.
  bool step();

  const std::string& last_error() const { return last_error_; }

 private:
  ParamRegistry& reg_;
  double lr_;
  double weight_decay_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::string last_error_;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  int skipped_samples = 0;
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::vector<long>> confusion;  // [gold][predicted]
  int evaluated = 0;
  int skipped = 0;
};

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion);

// Deterministic split by seed, per-epoch shuffling, early stopping on
// validation accuracy; the parameters of the best epoch are restored.
TrainResult train(Model& model, const Dataset& dataset, const TrainConfig& config);

Metrics evaluate(Model& model, const Dataset& dataset);

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& reg);
void restore_params(ParamRegistry& reg, const std::vector<std::vector<double>>& snapshot);

void save_history(const std::vector<EpochStats>& history, const std::string& path);

struct GradCheckReport {
  bool passed = false;
  int probes = 0;
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Central finite differences against the analytic gradient of the full
// loss, with the hard top-k selections frozen at the evaluation point.
GradCheckReport grad_check(const ModelConfig& config, int n_probes,
                           std::uint64_t probe_seed, double step = 1e-5,
                           double tolerance = 1e-4);

}  // namespace mmlogic
