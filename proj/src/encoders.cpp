#include "mmlogic/encoders.hpp"

#include <stdexcept>

namespace mmlogic {

TextEncoder::TextEncoder(ParamRegistry& reg, int vocab_size, int d, bool with_mixing)
    : vocab(vocab_size), dim(d), mixing(with_mixing) {
  if (vocab_size < 1) throw std::invalid_argument("text encoder: vocab size must be >= 1");
  table = reg.embedding("enc.text.table", vocab_size, d);
  if (mixing) {
    mix_w = reg.weight("enc.text.mix.w", d, d);
    mix_b = reg.zeros("enc.text.mix.b", 1, d);
  }
}

Tensor TextEncoder::encode(const std::vector<int>& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("text encoder: empty token sequence");
  std::vector<int> ids(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens[i];
    ids[i] = (id >= 0 && id < vocab) ? id : 0;  // UNK
  }
  Tensor rows = gather_rows(table, ids);
  if (!mixing) return rows;
  return relu(add_rowvec(matmul(rows, mix_w), mix_b));
}

PatchEncoder::PatchEncoder(ParamRegistry& reg, int f, int d, int z)
    : feat(f), dim(d), grid(z) {
  if (f < 1 || d < 1 || z < 1) throw std::invalid_argument("patch encoder: dimensions must be >= 1");
  w1 = reg.weight("enc.patch.w1", f, d);
  b1 = reg.zeros("enc.patch.b1", 1, d);
  w2 = reg.weight("enc.patch.w2", d, d);
  b2 = reg.zeros("enc.patch.b2", 1, d);
}

Tensor PatchEncoder::encode(const std::vector<std::vector<double>>& patches) const {
  const int expected = grid * grid;
  if (static_cast<int>(patches.size()) != expected) {
    throw std::invalid_argument("patch encoder: expected " + std::to_string(expected) +
                                " patch rows (z=" + std::to_string(grid) + "), got " +
                                std::to_string(patches.size()));
  }
  for (const auto& row : patches) {
    if (static_cast<int>(row.size()) != feat) {
      throw std::invalid_argument("patch encoder: expected feature width " +
                                  std::to_string(feat) + ", got " + std::to_string(row.size()));
    }
  }
  Tensor x = Tensor::from_rows(patches);
  Tensor hidden = relu(add_rowvec(matmul(x, w1), b1));
  return add_rowvec(matmul(hidden, w2), b2);
}

}  // namespace mmlogic
