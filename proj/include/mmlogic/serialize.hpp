#pragma once

#include <string>

#include "mmlogic/model.hpp"

namespace mmlogic {

// Versioned binary model artifact embedding the full config, so eval and
// explain never need the original config file.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// The artifact's embedded config header, as a JSON string.
std::string read_model_header(const std::string& path);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

}  // namespace mmlogic
