#pragma once

#include <string>

#include "mmlogic/data.hpp"
#include "mmlogic/model.hpp"

namespace mmlogic {

// One explanation report as a single-line JSON object: prediction,
// probabilities, head truths, and the derived clause per layer and label
// with constants, scores, truths and correlation weights.
std::string build_report_json(const Model& model, const MultimodalSample& sample,
                              const SampleTrace& trace);

// Human-readable rendering derived from the JSON report.
std::string render_report_text(const std::string& report_json);

// Clause in logic notation, e.g.
//   b_tv((t_3,v_12), Rumor) ∧ b_t(t_5, Rumor) ⇒ h((T,I), Rumor)
std::string clause_notation(const Clause& clause, const std::string& label_name);

}  // namespace mmlogic
