#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmlogic {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One (text, image, label) instance. Patches arrive as feature vectors,
// never raw images.
struct MultimodalSample {
  std::string id;
  std::vector<int> tokens;
  std::vector<std::string> token_surface;      // optional, for reports
  std::vector<std::pair<int, int>> dep_edges;  // symmetric text-text edges
  std::vector<std::vector<double>> patches;    // r x f
  std::string label;
};

struct DatasetMeta {
  int z = 0;
  int f = 0;
  std::vector<std::string> labels;
  std::map<std::string, int> vocab;  // optional string-token mapping
};

struct Dataset {
  DatasetMeta meta;
  std::vector<MultimodalSample> samples;
};

// All pairs (i, j), i < j, |i - j| <= w. Symmetric by construction and
// self-loop-free.
std::vector<std::pair<int, int>> window_edges(int m, int w);

// Planted-rule generator: positive iff the trigger token appears anywhere
// AND some patch row matches the prototype vector (up to jitter).
// Planted entities repeat (a salient word recurs, a doctored region spans
// several patches); the repeat counts are drawn identically wherever the
// entity appears, so counts carry no label information.
struct SyntheticSpec {
  int vocab = 50;
  int z = 4;
  int f = 8;
  int trigger_token = 7;
  std::vector<double> prototype;  // empty: +-2 pattern derived from the seed
  double jitter = 0.1;            // stddev of prototype perturbation
  double noise = 0.05;            // label flip probability
  double balance = 0.5;           // positive-class rate before noise
  int min_tokens = 4;
  int max_tokens = 7;
  int min_trigger_repeats = 2;
  int max_trigger_repeats = 4;
  int min_proto_patches = 2;
  int max_proto_patches = 4;
  std::uint64_t seed = 7;
  std::string negative_label = "NonRumor";
  std::string positive_label = "Rumor";

  void validate() const;
  std::vector<double> resolved_prototype() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec, int n);

// Recomputed (not stored) rule predicates, for rule-recovery analysis.
bool has_trigger_token(const SyntheticSpec& spec, const MultimodalSample& s);
std::vector<int> prototype_patches(const SyntheticSpec& spec, const MultimodalSample& s);
bool rule_holds(const SyntheticSpec& spec, const MultimodalSample& s);

// JSONL ingestion. The sidecar <path>.meta.json carries z, f and the label
// list; records without dep_edges fall back to window adjacency.
Dataset load_dataset(const std::string& jsonl_path, int window = 2);
void save_dataset(const Dataset& dataset, const std::string& jsonl_path);

// Flat key=value config files (# comments allowed).
std::map<std::string, std::string> read_kv_file(const std::string& path);
SyntheticSpec parse_synthetic_spec(const std::map<std::string, std::string>& kv);

}  // namespace mmlogic
