#include "mmlogic/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace mmlogic {

using nlohmann::json;

std::vector<std::pair<int, int>> window_edges(int m, int w) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m && j <= i + w; ++j) edges.emplace_back(i, j);
  }
  return edges;
}

void SyntheticSpec::validate() const {
  if (vocab < 2) throw DataError("synthetic spec: vocab must be >= 2");
  if (z < 1) throw DataError("synthetic spec: z must be >= 1");
  if (f < 1) throw DataError("synthetic spec: f must be >= 1");
  if (trigger_token < 1 || trigger_token >= vocab) {
    throw DataError("synthetic spec: trigger_token " + std::to_string(trigger_token) +
                    " outside [1, vocab)");
  }
  if (!prototype.empty() && static_cast<int>(prototype.size()) != f) {
    throw DataError("synthetic spec: prototype length " + std::to_string(prototype.size()) +
                    " != f=" + std::to_string(f));
  }
  if (!(noise >= 0.0 && noise < 0.5)) throw DataError("synthetic spec: noise must be in [0, 0.5)");
  if (!(balance > 0.0 && balance < 1.0)) throw DataError("synthetic spec: balance must be in (0,1)");
  if (min_tokens < 2 || max_tokens < min_tokens) {
    throw DataError("synthetic spec: need 2 <= min_tokens <= max_tokens");
  }
  if (min_trigger_repeats < 1 || max_trigger_repeats < min_trigger_repeats) {
    throw DataError("synthetic spec: need 1 <= min_trigger_repeats <= max_trigger_repeats");
  }
  if (max_trigger_repeats > min_tokens) {
    throw DataError("synthetic spec: max_trigger_repeats exceeds min_tokens");
  }
  if (min_proto_patches < 1 || max_proto_patches < min_proto_patches) {
    throw DataError("synthetic spec: need 1 <= min_proto_patches <= max_proto_patches");
  }
  if (max_proto_patches > z * z) {
    throw DataError("synthetic spec: max_proto_patches exceeds the patch count z*z");
  }
  if (jitter < 0.0) throw DataError("synthetic spec: jitter must be >= 0");
  if (negative_label == positive_label) throw DataError("synthetic spec: labels must differ");
}

std::vector<double> SyntheticSpec::resolved_prototype() const {
  if (!prototype.empty()) return prototype;
  std::mt19937_64 rng(seed ^ 0x70726f746fULL);
  std::vector<double> p(f);
  for (double& v : p) v = (rng() & 1) ? 2.0 : -2.0;
  return p;
}

namespace {

bool patch_matches_prototype(const std::vector<double>& patch,
                             const std::vector<double>& proto) {
  for (std::size_t i = 0; i < proto.size(); ++i) {
    if (std::abs(patch[i] - proto[i]) > 0.5) return false;
  }
  return true;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw DataError("generate_synthetic: n must be >= 1");

  const std::vector<double> proto = spec.resolved_prototype();
  const int r = spec.z * spec.z;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.meta.z = spec.z;
  ds.meta.f = spec.f;
  ds.meta.labels = {spec.negative_label, spec.positive_label};

  for (int idx = 0; idx < n; ++idx) {
    MultimodalSample s;
    {
      std::ostringstream oss;
      oss << "synth-";
      oss.width(6);
      oss.fill('0');
      oss << idx;
      s.id = oss.str();
    }

    const bool target_positive = unit(rng) < spec.balance;
    // negatives break the conjunction one of three ways
    int negative_mode = 0;
    if (!target_positive) negative_mode = static_cast<int>(rng() % 3);
    const bool want_trigger = target_positive || negative_mode == 1;
    const bool want_proto = target_positive || negative_mode == 2;

    const int m = spec.min_tokens +
                  static_cast<int>(rng() % static_cast<std::uint64_t>(spec.max_tokens - spec.min_tokens + 1));
    s.tokens.resize(m);
    for (int i = 0; i < m; ++i) {
      // draw from [1, vocab) excluding the trigger; 0 stays reserved for UNK
      int tok = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(spec.vocab - 1));
      while (tok == spec.trigger_token) {
        tok = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(spec.vocab - 1));
      }
      s.tokens[i] = tok;
    }
    if (want_trigger) {
      const int span = spec.max_trigger_repeats - spec.min_trigger_repeats + 1;
      const int repeats = spec.min_trigger_repeats +
                          static_cast<int>(rng() % static_cast<std::uint64_t>(span));
      std::vector<int> positions(m);
      std::iota(positions.begin(), positions.end(), 0);
      std::shuffle(positions.begin(), positions.end(), rng);
      for (int i = 0; i < std::min(repeats, m); ++i) {
        s.tokens[positions[i]] = spec.trigger_token;
      }
    }
    s.token_surface.resize(m);
    for (int i = 0; i < m; ++i) s.token_surface[i] = "w" + std::to_string(s.tokens[i]);
    s.dep_edges = window_edges(m, 2);

    s.patches.assign(r, std::vector<double>(spec.f));
    for (auto& row : s.patches) {
      for (double& v : row) v = gauss(rng);
    }
    if (want_proto) {
      const int span = spec.max_proto_patches - spec.min_proto_patches + 1;
      const int cells = spec.min_proto_patches +
                        static_cast<int>(rng() % static_cast<std::uint64_t>(span));
      std::vector<int> slots(r);
      std::iota(slots.begin(), slots.end(), 0);
      std::shuffle(slots.begin(), slots.end(), rng);
      for (int c = 0; c < std::min(cells, r); ++c) {
        auto& row = s.patches[slots[c]];
        for (int i = 0; i < spec.f; ++i) row[i] = proto[i] + spec.jitter * gauss(rng);
      }
    }

    bool positive = target_positive;
    if (unit(rng) < spec.noise) positive = !positive;
    s.label = positive ? spec.positive_label : spec.negative_label;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

bool has_trigger_token(const SyntheticSpec& spec, const MultimodalSample& s) {
  return std::find(s.tokens.begin(), s.tokens.end(), spec.trigger_token) != s.tokens.end();
}

std::vector<int> prototype_patches(const SyntheticSpec& spec, const MultimodalSample& s) {
  const std::vector<double> proto = spec.resolved_prototype();
  std::vector<int> hits;
  for (std::size_t q = 0; q < s.patches.size(); ++q) {
    if (patch_matches_prototype(s.patches[q], proto)) hits.push_back(static_cast<int>(q));
  }
  return hits;
}

bool rule_holds(const SyntheticSpec& spec, const MultimodalSample& s) {
  return has_trigger_token(spec, s) && !prototype_patches(spec, s).empty();
}

// -- JSONL ---------------------------------------------------------------

namespace {

std::string meta_path_for(const std::string& jsonl_path) {
  return jsonl_path + ".meta.json";
}

DatasetMeta load_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset sidecar " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("sidecar " + path + ": " + e.what());
  }
  DatasetMeta meta;
  try {
    meta.z = j.at("z").get<int>();
    meta.f = j.at("f").get<int>();
    meta.labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("vocab")) meta.vocab = j.at("vocab").get<std::map<std::string, int>>();
  } catch (const json::exception& e) {
    throw DataError("sidecar " + path + ": " + e.what());
  }
  if (meta.z < 1 || meta.f < 1 || meta.labels.size() < 2) {
    throw DataError("sidecar " + path + ": need z >= 1, f >= 1 and at least two labels");
  }
  return meta;
}

std::string label_list(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) {
    if (!out.empty()) out += ", ";
    out += l;
  }
  return out;
}

MultimodalSample parse_record(const json& j, const DatasetMeta& meta,
                              const std::string& where, int window) {
  MultimodalSample s;
  s.id = j.at("id").get<std::string>();

  const json& toks = j.at("tokens");
  if (!toks.is_array() || toks.empty()) {
    throw DataError(where + ": tokens must be a non-empty array");
  }
  for (const auto& t : toks) {
    if (t.is_number_integer()) {
      s.tokens.push_back(t.get<int>());
    } else if (t.is_string()) {
      const std::string w = t.get<std::string>();
      auto it = meta.vocab.find(w);
      s.tokens.push_back(it == meta.vocab.end() ? 0 : it->second);  // UNK
      s.token_surface.push_back(w);
    } else {
      throw DataError(where + ": tokens must be ints or strings");
    }
  }
  if (s.token_surface.empty() && j.contains("token_surface")) {
    s.token_surface = j.at("token_surface").get<std::vector<std::string>>();
  }

  const int m = static_cast<int>(s.tokens.size());
  if (j.contains("dep_edges") && !j.at("dep_edges").is_null()) {
    for (const auto& e : j.at("dep_edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw DataError(where + ": dep_edges entries must be [i, j] pairs");
      }
      const int a = e[0].get<int>();
      const int b = e[1].get<int>();
      if (a < 0 || a >= m || b < 0 || b >= m) {
        throw DataError(where + ": dep edge (" + std::to_string(a) + "," +
                        std::to_string(b) + ") outside token range [0," + std::to_string(m) + ")");
      }
      s.dep_edges.emplace_back(a, b);
    }
  } else {
    s.dep_edges = window_edges(m, window);
  }

  if (!j.contains("patches")) throw DataError(where + ": missing patches");
  const json& patches = j.at("patches");
  const int r = meta.z * meta.z;
  if (static_cast<int>(patches.size()) != r) {
    throw DataError(where + ": expected " + std::to_string(r) + " patch rows (z=" +
                    std::to_string(meta.z) + "), got " + std::to_string(patches.size()));
  }
  for (const auto& row : patches) {
    if (static_cast<int>(row.size()) != meta.f) {
      throw DataError(where + ": patch row width " + std::to_string(row.size()) +
                      " != f=" + std::to_string(meta.f));
    }
    s.patches.push_back(row.get<std::vector<double>>());
  }

  s.label = j.at("label").get<std::string>();
  if (std::find(meta.labels.begin(), meta.labels.end(), s.label) == meta.labels.end()) {
    throw DataError(where + ": unknown label '" + s.label + "' (label space: " +
                    label_list(meta.labels) + ")");
  }
  return s;
}

}  // namespace

Dataset load_dataset(const std::string& jsonl_path, int window) {
  Dataset ds;
  ds.meta = load_meta(meta_path_for(jsonl_path));

  std::ifstream in(jsonl_path);
  if (!in) throw DataError("cannot open dataset " + jsonl_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = jsonl_path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    try {
      ds.samples.push_back(parse_record(j, ds.meta, where, window));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (ds.samples.empty()) {
    std::cerr << "warning: dataset " << jsonl_path << " is empty\n";
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& jsonl_path) {
  {
    std::ofstream out(jsonl_path);
    if (!out) throw DataError("cannot write dataset " + jsonl_path);
    for (const auto& s : dataset.samples) {
      json j;
      j["id"] = s.id;
      j["tokens"] = s.tokens;
      if (!s.token_surface.empty()) j["token_surface"] = s.token_surface;
      json edges = json::array();
      for (const auto& [a, b] : s.dep_edges) edges.push_back({a, b});
      j["dep_edges"] = edges;
      j["patches"] = s.patches;
      j["label"] = s.label;
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(meta_path_for(jsonl_path));
    if (!out) throw DataError("cannot write dataset sidecar for " + jsonl_path);
    json j;
    j["z"] = dataset.meta.z;
    j["f"] = dataset.meta.f;
    j["labels"] = dataset.meta.labels;
    if (!dataset.meta.vocab.empty()) j["vocab"] = dataset.meta.vocab;
    out << j.dump(2) << "\n";
  }
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t\r");
    const auto end = s.find_last_not_of(" \t\r");
    if (begin == std::string::npos) return std::string();
    return s.substr(begin, end - begin + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

SyntheticSpec parse_synthetic_spec(const std::map<std::string, std::string>& kv) {
  SyntheticSpec spec;
  auto get_int = [&](const char* key, int fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      return std::stoi(it->second);
    } catch (const std::exception&) {
      throw DataError(std::string("synthetic spec: field '") + key + "' is not an integer: " +
                      it->second);
    }
  };
  auto get_double = [&](const char* key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw DataError(std::string("synthetic spec: field '") + key + "' is not a number: " +
                      it->second);
    }
  };
  auto get_string = [&](const char* key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  spec.vocab = get_int("vocab", spec.vocab);
  spec.z = get_int("z", spec.z);
  spec.f = get_int("f", spec.f);
  spec.trigger_token = get_int("trigger_token", spec.trigger_token);
  spec.jitter = get_double("jitter", spec.jitter);
  spec.noise = get_double("noise", spec.noise);
  spec.balance = get_double("balance", spec.balance);
  spec.min_tokens = get_int("min_tokens", spec.min_tokens);
  spec.max_tokens = get_int("max_tokens", spec.max_tokens);
  spec.min_trigger_repeats = get_int("min_trigger_repeats", spec.min_trigger_repeats);
  spec.max_trigger_repeats = get_int("max_trigger_repeats", spec.max_trigger_repeats);
  spec.min_proto_patches = get_int("min_proto_patches", spec.min_proto_patches);
  spec.max_proto_patches = get_int("max_proto_patches", spec.max_proto_patches);
  spec.seed = static_cast<std::uint64_t>(get_int("seed", static_cast<int>(spec.seed)));
  spec.negative_label = get_string("negative_label", spec.negative_label);
  spec.positive_label = get_string("positive_label", spec.positive_label);

  if (auto it = kv.find("prototype"); it != kv.end() && !it->second.empty()) {
    std::istringstream iss(it->second);
    std::string tok;
    while (std::getline(iss, tok, ',')) {
      try {
        spec.prototype.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw DataError("synthetic spec: field 'prototype' has a non-numeric entry: " + tok);
      }
    }
  }
  spec.validate();
  return spec;
}

}  // namespace mmlogic
