#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmlogic/data.hpp"
#include "mmlogic/model.hpp"
#include "mmlogic/report.hpp"
#include "mmlogic/serialize.hpp"
#include "mmlogic/train.hpp"

namespace {

using namespace mmlogic;

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream iss(csv);
  std::string tok;
  while (std::getline(iss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

int kv_int(const std::map<std::string, std::string>& kv, const char* key, int fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stoi(it->second);
}

double kv_double(const std::map<std::string, std::string>& kv, const char* key, double fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stod(it->second);
}

bool kv_bool(const std::map<std::string, std::string>& kv, const char* key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

int data_vocab_size(const Dataset& ds) {
  int max_id = 1;
  for (const auto& s : ds.samples) {
    for (int t : s.tokens) max_id = std::max(max_id, t);
  }
  for (const auto& [word, id] : ds.meta.vocab) max_id = std::max(max_id, id);
  return max_id + 1;
}

void print_metrics(const Metrics& metrics, const std::vector<std::string>& labels) {
  std::cout << "accuracy " << metrics.accuracy << " (" << metrics.evaluated << " samples";
  if (metrics.skipped > 0) std::cout << ", " << metrics.skipped << " skipped";
  std::cout << ")\n";
  std::cout << "label"
            << "\tprecision\trecall\tf1\n";
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::cout << labels[c] << "\t" << metrics.precision[c] << "\t" << metrics.recall[c]
              << "\t" << metrics.f1[c] << "\n";
  }
}

struct TrainCli {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  CLI::App* cmd = nullptr;
  // overrides; applied only when the flag was passed
  std::uint64_t seed = 1;
  int k = 5, g = 10, epochs = 20, patience = 5, batch = 32, d = 200, depth = 2, vocab = 0;
  double beta = 0.1, lr = 1e-4, weight_decay = 5e-4, val_fraction = 0.1;
  std::string layers_csv;
  bool no_text_mixing = false;
};

void resolve_configs(const TrainCli& cli, const Dataset& ds, ModelConfig& mc, TrainConfig& tc) {
  std::map<std::string, std::string> kv;
  if (!cli.config_path.empty()) kv = read_kv_file(cli.config_path);

  mc.vocab = 0;  // derive from the data unless the config or a flag names it
  mc.d = kv_int(kv, "d", mc.d);
  mc.k = kv_int(kv, "k", mc.k);
  mc.g = kv_int(kv, "g", mc.g);
  mc.beta = kv_double(kv, "beta", mc.beta);
  mc.layers = kv_int(kv, "L", mc.layers);
  mc.text_mixing = kv_bool(kv, "text_mixing", mc.text_mixing);
  mc.seed = static_cast<std::uint64_t>(kv_int(kv, "seed", static_cast<int>(mc.seed)));
  if (auto it = kv.find("layer_set"); it != kv.end()) mc.layer_set = parse_int_list(it->second);
  if (auto it = kv.find("vocab"); it != kv.end()) mc.vocab = std::stoi(it->second);

  tc.lr = kv_double(kv, "lr", tc.lr);
  tc.weight_decay = kv_double(kv, "weight_decay", tc.weight_decay);
  tc.batch = kv_int(kv, "batch", tc.batch);
  tc.max_epochs = kv_int(kv, "epochs", tc.max_epochs);
  tc.patience = kv_int(kv, "patience", tc.patience);
  tc.val_fraction = kv_double(kv, "val_fraction", tc.val_fraction);

  const CLI::App* cmd = cli.cmd;
  if (cmd->count("--d")) mc.d = cli.d;
  if (cmd->count("--k")) mc.k = cli.k;
  if (cmd->count("--g")) mc.g = cli.g;
  if (cmd->count("--beta")) mc.beta = cli.beta;
  if (cmd->count("--depth")) mc.layers = cli.depth;
  if (cmd->count("--layers")) mc.layer_set = parse_int_list(cli.layers_csv);
  if (cmd->count("--seed")) mc.seed = cli.seed;
  if (cmd->count("--vocab")) mc.vocab = cli.vocab;
  if (cmd->count("--no-text-mixing")) mc.text_mixing = false;
  if (cmd->count("--lr")) tc.lr = cli.lr;
  if (cmd->count("--weight-decay")) tc.weight_decay = cli.weight_decay;
  if (cmd->count("--batch")) tc.batch = cli.batch;
  if (cmd->count("--epochs")) tc.max_epochs = cli.epochs;
  if (cmd->count("--patience")) tc.patience = cli.patience;
  if (cmd->count("--val-fraction")) tc.val_fraction = cli.val_fraction;

  mc.z = ds.meta.z;
  mc.f = ds.meta.f;
  mc.labels = ds.meta.labels;
  if (mc.vocab == 0) mc.vocab = std::max(data_vocab_size(ds), 2);
  tc.seed = mc.seed;
}

int run_synth(const std::string& spec_path, const std::string& out_path, int n,
              bool seed_given, std::uint64_t seed) {
  SyntheticSpec spec = parse_synthetic_spec(read_kv_file(spec_path));
  if (seed_given) spec.seed = seed;
  Dataset ds = generate_synthetic(spec, n);
  save_dataset(ds, out_path);
  std::cout << "wrote " << ds.samples.size() << " samples to " << out_path << "\n";
  return 0;
}

int run_train(const TrainCli& cli) {
  Dataset ds = load_dataset(cli.data_path);
  if (ds.samples.empty()) {
    std::cerr << "error: dataset " << cli.data_path << " has no samples\n";
    return 1;
  }
  ModelConfig mc;
  TrainConfig tc;
  resolve_configs(cli, ds, mc, tc);

  Model model(mc);
  std::cout << "training on " << ds.samples.size() << " samples (d=" << mc.d
            << ", k=" << mc.k << ", g=" << mc.g << ", beta=" << mc.beta
            << ", L=" << mc.layers << ", seed=" << mc.seed << ")\n";
  TrainResult result = train(model, ds, tc);
  for (const EpochStats& e : result.history) {
    std::cout << "epoch " << e.epoch << "  train_loss " << e.train_loss
              << "  val_accuracy " << e.val_accuracy << "\n";
  }
  std::cout << "best epoch " << result.best_epoch << " (val_accuracy "
            << result.best_val_accuracy << ")\n";

  std::filesystem::create_directories(cli.out_dir);
  const std::string model_path = cli.out_dir + "/model.bin";
  const std::string history_path = cli.out_dir + "/history.jsonl";
  save_model(model, model_path);
  save_history(result.history, history_path);
  std::cout << "saved " << model_path << " and " << history_path << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path) {
  Model model = load_model(model_path);
  Dataset ds = load_dataset(data_path);
  if (ds.meta.z != model.config().z || ds.meta.f != model.config().f ||
      ds.meta.labels != model.config().labels) {
    std::cerr << "error: dataset geometry/labels do not match the model artifact\n";
    return 1;
  }
  Metrics metrics = evaluate(model, ds);
  print_metrics(metrics, model.labels().names);
  return 0;
}

int run_explain(const std::string& model_path, const std::string& data_path,
                const std::string& ids_csv, const std::string& out_path) {
  Model model = load_model(model_path);
  Dataset ds = load_dataset(data_path);
  if (ds.meta.z != model.config().z || ds.meta.f != model.config().f ||
      ds.meta.labels != model.config().labels) {
    std::cerr << "error: dataset geometry/labels do not match the model artifact\n";
    return 1;
  }

  std::set<std::string> wanted;
  if (!ids_csv.empty()) {
    std::istringstream iss(ids_csv);
    std::string id;
    while (std::getline(iss, id, ',')) {
      if (!id.empty()) wanted.insert(id);
    }
  }

  std::vector<const MultimodalSample*> selected;
  std::set<std::string> found;
  for (const auto& s : ds.samples) {
    if (wanted.empty() || wanted.count(s.id)) {
      selected.push_back(&s);
      found.insert(s.id);
    }
  }
  std::sort(selected.begin(), selected.end(),
            [](const MultimodalSample* a, const MultimodalSample* b) { return a->id < b->id; });

  std::ofstream file;
  const bool to_file = !out_path.empty();
  if (to_file) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
  }

  for (const MultimodalSample* s : selected) {
    SampleTrace trace;
    ForwardOptions opts;
    opts.trace = &trace;
    opts.with_loss = false;
    std::string report;
    try {
      model.forward(*s, opts);
      report = build_report_json(model, *s, trace);
    } catch (const SampleSkipped& e) {
      std::cerr << "skipping sample " << s->id << ": " << e.what() << "\n";
      continue;
    }
    if (to_file) {
      file << report << "\n";
      std::cout << render_report_text(report);
    } else {
      std::cout << report << "\n";
    }
  }

  std::vector<std::string> missing;
  for (const auto& id : wanted) {
    if (!found.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::ostream& out = to_file ? std::cout : std::cerr;
    out << "skipped (unknown ids):";
    for (const auto& id : missing) out << " " << id;
    out << "\n";
  }
  return 0;
}

int run_gradcheck(const std::string& config_path, const CLI::App* cmd, int probes,
                  double tol, double step, std::uint64_t seed, int k, int g, double beta,
                  int d, int z, int f) {
  ModelConfig mc;
  mc.d = 8;
  mc.z = 2;
  mc.f = 4;
  mc.vocab = 20;
  mc.k = 2;
  mc.g = 3;
  mc.beta = 0.25;
  mc.labels = {"NonRumor", "Rumor"};
  mc.seed = 11;

  if (!config_path.empty()) {
    auto kv = read_kv_file(config_path);
    mc.d = kv_int(kv, "d", mc.d);
    mc.z = kv_int(kv, "z", mc.z);
    mc.f = kv_int(kv, "f", mc.f);
    mc.k = kv_int(kv, "k", mc.k);
    mc.g = kv_int(kv, "g", mc.g);
    mc.beta = kv_double(kv, "beta", mc.beta);
    mc.seed = static_cast<std::uint64_t>(kv_int(kv, "seed", static_cast<int>(mc.seed)));
  }
  if (cmd->count("--k")) mc.k = k;
  if (cmd->count("--g")) mc.g = g;
  if (cmd->count("--beta")) mc.beta = beta;
  if (cmd->count("--d")) mc.d = d;
  if (cmd->count("--z")) mc.z = z;
  if (cmd->count("--f")) mc.f = f;
  if (cmd->count("--seed")) mc.seed = seed;

  GradCheckReport report = grad_check(mc, probes, mc.seed + 1, step, tol);
  std::cout << "gradient check: " << report.probes << " probes, max relative error "
            << report.max_rel_error << "\n";
  if (!report.worst_param.empty()) {
    std::cout << "worst parameter: " << report.worst_param << "[" << report.worst_index
              << "] analytic " << report.analytic_at_worst << " vs finite-difference "
              << report.numeric_at_worst << "\n";
  }
  std::cout << (report.passed ? "PASS" : "FAIL") << " (tolerance " << tol << ")\n";
  return report.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learn and explain logic clauses over token/patch inputs"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-rule dataset");
  std::string synth_spec, synth_out;
  int synth_n = 100;
  std::uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec, "flat key=value spec file")->required();
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_option("--n", synth_n, "number of samples")->required();
  synth->add_option("--seed", synth_seed, "override the spec seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and save the artifact");
  TrainCli tcli;
  tcli.cmd = train_cmd;
  train_cmd->add_option("--config", tcli.config_path, "flat key=value config file");
  train_cmd->add_option("--data", tcli.data_path, "training dataset (JSONL)")->required();
  train_cmd->add_option("--out", tcli.out_dir, "output directory")->required();
  train_cmd->add_option("--seed", tcli.seed, "RNG seed");
  train_cmd->add_option("--k", tcli.k, "objects per meta-predicate");
  train_cmd->add_option("--g", tcli.g, "correlations per bank");
  train_cmd->add_option("--beta", tcli.beta, "clause length rate");
  train_cmd->add_option("--layers", tcli.layers_csv, "layer set, e.g. 0,1,2");
  train_cmd->add_option("--depth", tcli.depth, "GCN depth L");
  train_cmd->add_option("--d", tcli.d, "embedding width");
  train_cmd->add_option("--vocab", tcli.vocab, "vocabulary size");
  train_cmd->add_option("--epochs", tcli.epochs, "max epochs");
  train_cmd->add_option("--lr", tcli.lr, "learning rate");
  train_cmd->add_option("--weight-decay", tcli.weight_decay, "decoupled weight decay");
  train_cmd->add_option("--patience", tcli.patience, "early stopping patience");
  train_cmd->add_option("--batch", tcli.batch, "batch size");
  train_cmd->add_option("--val-fraction", tcli.val_fraction, "validation split fraction");
  train_cmd->add_flag("--no-text-mixing", tcli.no_text_mixing, "disable the text mixing layer");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model artifact");
  std::string eval_model, eval_data;
  eval_cmd->add_option("--model", eval_model, "model artifact")->required();
  eval_cmd->add_option("--data", eval_data, "dataset (JSONL)")->required();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "emit clause explanations");
  std::string explain_model, explain_data, explain_ids, explain_out;
  explain_cmd->add_option("--model", explain_model, "model artifact")->required();
  explain_cmd->add_option("--data", explain_data, "dataset (JSONL)")->required();
  explain_cmd->add_option("--ids", explain_ids, "comma-separated sample ids (default: all)");
  explain_cmd->add_option("--out", explain_out,
                          "JSONL report path (pretty text goes to stdout)");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string grad_config;
  int grad_probes = 200, grad_k = 2, grad_g = 3, grad_d = 8, grad_z = 2, grad_f = 4;
  double grad_tol = 1e-4, grad_step = 1e-5, grad_beta = 0.25;
  std::uint64_t grad_seed = 11;
  grad_cmd->add_option("--config", grad_config, "flat key=value config file");
  grad_cmd->add_option("--probes", grad_probes, "number of parameter probes");
  grad_cmd->add_option("--tol", grad_tol, "relative error tolerance");
  grad_cmd->add_option("--step", grad_step, "finite-difference step");
  grad_cmd->add_option("--seed", grad_seed, "RNG seed");
  grad_cmd->add_option("--k", grad_k, "objects per meta-predicate");
  grad_cmd->add_option("--g", grad_g, "correlations per bank");
  grad_cmd->add_option("--beta", grad_beta, "clause length rate");
  grad_cmd->add_option("--d", grad_d, "embedding width");
  grad_cmd->add_option("--z", grad_z, "patch grid side");
  grad_cmd->add_option("--f", grad_f, "patch feature width");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return run_synth(synth_spec, synth_out, synth_n, synth->count("--seed") > 0, synth_seed);
    }
    if (train_cmd->parsed()) return run_train(tcli);
    if (eval_cmd->parsed()) return run_eval(eval_model, eval_data);
    if (explain_cmd->parsed()) {
      return run_explain(explain_model, explain_data, explain_ids, explain_out);
    }
    if (grad_cmd->parsed()) {
      return run_gradcheck(grad_config, grad_cmd, grad_probes, grad_tol, grad_step, grad_seed,
                           grad_k, grad_g, grad_beta, grad_d, grad_z, grad_f);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
