#include "mmlogic/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace mmlogic {

using nlohmann::json;

namespace {

std::string constant_term(MetaPredicateKind kind, const std::pair<int, int>& c) {
  switch (kind) {
    case MetaPredicateKind::Token: return "t_" + std::to_string(c.first);
    case MetaPredicateKind::Patch: return "v_" + std::to_string(c.first);
    case MetaPredicateKind::TokenToken:
      return "(t_" + std::to_string(c.first) + ",t_" + std::to_string(c.second) + ")";
    case MetaPredicateKind::PatchPatch:
      return "(v_" + std::to_string(c.first) + ",v_" + std::to_string(c.second) + ")";
    case MetaPredicateKind::TokenPatch:
      return "(t_" + std::to_string(c.first) + ",v_" + std::to_string(c.second) + ")";
  }
  return "?";
}

std::string atom_notation(const ClauseAtom& atom, const std::string& label_name) {
  return std::string(predicate_tag(atom.kind)) + "(" +
         constant_term(atom.kind, atom.constants) + ", " + label_name + ")";
}

json constant_json(bool is_token, int index, const MultimodalSample& sample, int z) {
  json c;
  if (is_token) {
    c["type"] = "token";
    c["index"] = index;
    if (index >= 0 && index < static_cast<int>(sample.token_surface.size())) {
      c["surface"] = sample.token_surface[index];
    }
  } else {
    c["type"] = "patch";
    c["index"] = index;
    c["cell"] = {index / z, index % z};
  }
  return c;
}

json constants_json(const ClauseAtom& atom, const MultimodalSample& sample, int z) {
  json arr = json::array();
  switch (atom.kind) {
    case MetaPredicateKind::Token:
      arr.push_back(constant_json(true, atom.constants.first, sample, z));
      break;
    case MetaPredicateKind::Patch:
      arr.push_back(constant_json(false, atom.constants.first, sample, z));
      break;
    case MetaPredicateKind::TokenToken:
      arr.push_back(constant_json(true, atom.constants.first, sample, z));
      arr.push_back(constant_json(true, atom.constants.second, sample, z));
      break;
    case MetaPredicateKind::PatchPatch:
      arr.push_back(constant_json(false, atom.constants.first, sample, z));
      arr.push_back(constant_json(false, atom.constants.second, sample, z));
      break;
    case MetaPredicateKind::TokenPatch:
      arr.push_back(constant_json(true, atom.constants.first, sample, z));
      arr.push_back(constant_json(false, atom.constants.second, sample, z));
      break;
  }
  return arr;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream oss;
  oss << std::fixed << std::setprecision(digits) << v;
  return oss.str();
}

}  // namespace

std::string clause_notation(const Clause& clause, const std::string& label_name) {
  std::string body;
  for (std::size_t i = 0; i < clause.atoms.size(); ++i) {
    if (i) body += " ∧ ";
    body += atom_notation(clause.atoms[i], label_name);
  }
  return body + " ⇒ h((T,I), " + label_name + ")";
}

std::string build_report_json(const Model& model, const MultimodalSample& sample,
                              const SampleTrace& trace) {
  const auto& labels = model.labels().names;
  const int z = model.config().z;

  json j;
  j["schema"] = "explain.v1";
  j["sample_id"] = sample.id;
  j["predicted_label"] = labels[trace.predicted];
  json probs;
  json heads;
  for (std::size_t y = 0; y < labels.size(); ++y) {
    probs[labels[y]] = trace.probs[y];
    heads[labels[y]] = trace.head_truths[y];
  }
  j["probabilities"] = probs;
  j["head_truths"] = heads;
  j["z"] = z;

  json clauses = json::array();
  for (const Clause& clause : trace.clauses) {
    json cj;
    cj["label"] = labels[clause.label];
    cj["layer"] = clause.layer;
    cj["conjunction_truth"] = clause.conjunction;
    cj["text"] = clause_notation(clause, labels[clause.label]);
    json atoms = json::array();
    for (const ClauseAtom& atom : clause.atoms) {
      json aj;
      aj["predicate"] = predicate_tag(atom.kind);
      aj["atom_index"] = atom.atom_index;
      aj["term"] = atom_notation(atom, labels[clause.label]);
      aj["score"] = atom.score;
      aj["truth"] = atom.truth;
      aj["constants"] = constants_json(atom, sample, z);
      // nonzero mixture weights, largest first
      std::vector<int> order;
      for (std::size_t i = 0; i < atom.correlation_weights.size(); ++i) {
        if (atom.correlation_weights[i] > 0.0) order.push_back(static_cast<int>(i));
      }
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (atom.correlation_weights[a] != atom.correlation_weights[b]) {
          return atom.correlation_weights[a] > atom.correlation_weights[b];
        }
        return a < b;
      });
      json correlations = json::array();
      for (int i : order) {
        correlations.push_back({{"index", i}, {"weight", atom.correlation_weights[i]}});
      }
      aj["correlations"] = correlations;
      atoms.push_back(aj);
    }
    cj["atoms"] = atoms;
    clauses.push_back(cj);
  }
  j["clauses"] = clauses;
  return j.dump();
}

std::string render_report_text(const std::string& report_json) {
  const json j = json::parse(report_json);
  std::ostringstream out;
  out << "sample " << j.at("sample_id").get<std::string>() << ": predicted "
      << j.at("predicted_label").get<std::string>() << " (p="
      << fmt(j.at("probabilities").at(j.at("predicted_label").get<std::string>()).get<double>())
      << ")\n";
  out << "  head truth ";
  for (const auto& [label, value] : j.at("head_truths").items()) {
    out << " " << label << "=" << fmt(value.get<double>());
  }
  out << "\n";
  for (const auto& cj : j.at("clauses")) {
    out << "  clause [layer " << cj.at("layer").get<int>() << ", "
        << cj.at("label").get<std::string>() << "] (truth "
        << fmt(cj.at("conjunction_truth").get<double>()) << "):\n";
    out << "    " << cj.at("text").get<std::string>() << "\n";
    for (const auto& aj : cj.at("atoms")) {
      out << "      " << aj.at("term").get<std::string>() << "  score="
          << fmt(aj.at("score").get<double>()) << " truth=" << fmt(aj.at("truth").get<double>());
      for (const auto& c : aj.at("constants")) {
        if (c.at("type").get<std::string>() == "token") {
          out << "  t_" << c.at("index").get<int>();
          if (c.contains("surface")) out << "='" << c.at("surface").get<std::string>() << "'";
        } else {
          const auto& cell = c.at("cell");
          out << "  v_" << c.at("index").get<int>() << "=(" << cell[0].get<int>() << ","
              << cell[1].get<int>() << ")";
        }
      }
      out << "  correlations";
      for (const auto& corr : aj.at("correlations")) {
        out << " c" << corr.at("index").get<int>() << "=" << fmt(corr.at("weight").get<double>(), 2);
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace mmlogic
