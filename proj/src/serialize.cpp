#include "mmlogic/serialize.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>

namespace mmlogic {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'M', 'L', 'G', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

std::string config_to_json(const ModelConfig& config) {
  json j;
  j["format"] = "mmlogic.model.v1";
  j["d"] = config.d;
  j["z"] = config.z;
  j["f"] = config.f;
  j["vocab"] = config.vocab;
  j["k"] = config.k;
  j["g"] = config.g;
  j["beta"] = config.beta;
  j["layers"] = config.layers;
  j["layer_set"] = config.layer_set;
  j["labels"] = config.labels;
  j["text_mixing"] = config.text_mixing;
  j["seed"] = config.seed;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model config header: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.d = j.at("d").get<int>();
    cfg.z = j.at("z").get<int>();
    cfg.f = j.at("f").get<int>();
    cfg.vocab = j.at("vocab").get<int>();
    cfg.k = j.at("k").get<int>();
    cfg.g = j.at("g").get<int>();
    cfg.beta = j.at("beta").get<double>();
    cfg.layers = j.at("layers").get<int>();
    cfg.layer_set = j.at("layer_set").get<std::vector<int>>();
    cfg.labels = j.at("labels").get<std::vector<std::string>>();
    cfg.text_mixing = j.at("text_mixing").get<bool>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("model config header: ") + e.what());
  }
  return cfg;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model artifact " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);

  const std::string header = config_to_json(model.config());
  write_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  const auto& items = model.registry().items();
  write_u64(out, items.size());
  for (const auto& [name, t] : items) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rows()));
    write_u32(out, static_cast<std::uint32_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed while writing model artifact " + path);
}

std::string read_model_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model artifact " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + " is not a model artifact");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw DataError(path + ": unsupported artifact version " + std::to_string(version));
  }
  const std::uint64_t len = read_u64(in);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(path + ": truncated artifact header");
  return header;
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model artifact " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + " is not a model artifact");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw DataError(path + ": unsupported artifact version " + std::to_string(version));
  }
  const std::uint64_t header_len = read_u64(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError(path + ": truncated artifact header");

  Model model(config_from_json(header));

  const std::uint64_t count = read_u64(in);
  if (count != model.registry().items().size()) {
    throw DataError(path + ": artifact has " + std::to_string(count) +
                    " parameters, model expects " +
                    std::to_string(model.registry().items().size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (!in) throw DataError(path + ": truncated artifact");
    Tensor t = model.registry().get(name);
    if (t.rows() != static_cast<int>(rows) || t.cols() != static_cast<int>(cols)) {
      throw DataError(path + ": parameter '" + name + "' has shape " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      ", model expects " + shape_str(t));
    }
    in.read(reinterpret_cast<char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw DataError(path + ": truncated parameter data for '" + name + "'");
  }
  return model;
}

}  // namespace mmlogic
