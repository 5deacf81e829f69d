#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "nameclass/dataprep.hpp"

namespace nameclass::toy {

// Synthetic labeled corpus: last names of length 4-8 over a-z whose class is
// carried by the final bigram. Each class owns three designated suffix
// bigrams; a name ends with one of its class's bigrams with probability
// `suffix_fidelity`, and with an unowned random bigram otherwise. First
// names are random and carry no signal. Genders are imbalanced 3:1
// (female:male) so the prep stage has something to undersample.
struct Params {
  std::size_t base_rows_per_cell = 500;  // female cells get 3x this, male 1x
  double suffix_fidelity = 0.97;
};

const std::array<std::array<std::string_view, 3>, 4>& class_suffixes();

std::vector<NameRecord> generate(std::uint64_t seed, const Params& params = {});

// Plain name lists for inference-side tests and benchmarks.
std::vector<std::string> random_lastnames(std::uint64_t seed, std::size_t n);
std::vector<std::string> random_firstnames(std::uint64_t seed, std::size_t n);

}  // namespace nameclass::toy
