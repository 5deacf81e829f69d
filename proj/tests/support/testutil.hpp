#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nameclass/dataprep.hpp"
#include "nameclass/model.hpp"
#include "nameclass/rng.hpp"

namespace testutil {

// Tiny configurations: embedding dim <= 4, hidden <= 3, 1-2 BiLSTM layers.
inline nameclass::ModelSpec random_tiny_spec(nameclass::Rng& rng, nameclass::NameMode mode) {
  nameclass::ModelSpec spec;
  spec.mode = mode;
  const int dim = 1 + static_cast<int>(rng.below(4));
  const int hidden = 1 + static_cast<int>(rng.below(3));
  const int layers = 1 + static_cast<int>(rng.below(2));
  spec.layers.push_back({nameclass::LayerKind::embedding, dim, false,
                         nameclass::Activation::none});
  for (int i = 0; i < layers; ++i) {
    spec.layers.push_back({nameclass::LayerKind::bilstm, hidden, i + 1 < layers,
                           nameclass::Activation::none});
  }
  spec.layers.push_back({nameclass::LayerKind::dense, nameclass::kNumClasses, false,
                         nameclass::Activation::softmax});
  return spec;
}

inline nameclass::Model random_tiny_model(nameclass::Rng& rng, nameclass::NameMode mode) {
  return nameclass::init_model(random_tiny_spec(rng, mode), rng.next_u64());
}

inline std::vector<int> random_indices(nameclass::Rng& rng, std::size_t len) {
  std::vector<int> indices(len);
  for (int& v : indices) v = static_cast<int>(rng.below(nameclass::kDictionarySize));
  return indices;
}

inline std::vector<nameclass::EncodedRow> random_rows(nameclass::Rng& rng,
                                                      nameclass::NameMode mode,
                                                      std::size_t count) {
  std::vector<nameclass::EncodedRow> rows(count);
  for (auto& row : rows) {
    row.label = static_cast<int>(rng.below(nameclass::kNumClasses));
    row.indices =
        random_indices(rng, static_cast<std::size_t>(nameclass::input_length(mode)));
  }
  return rows;
}

inline double relative_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_prob_relative_error(const nameclass::Vec4& a, const nameclass::Vec4& b) {
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, relative_error(a[k], b[k]));
  return worst;
}

}  // namespace testutil
