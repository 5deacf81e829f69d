#include "nameclass/toy.hpp"

#include <string>

#include "nameclass/rng.hpp"

namespace nameclass::toy {

namespace {

constexpr std::array<std::array<std::string_view, 3>, 4> kSuffixes{{
    {"ba", "co", "du"},
    {"fe", "gi", "ho"},
    {"ju", "ka", "lo"},
    {"mu", "ne", "pi"},
}};

bool is_designated(std::string_view bigram) {
  for (const auto& row : kSuffixes) {
    for (std::string_view s : row) {
      if (s == bigram) return true;
    }
  }
  return false;
}

std::string random_letters(Rng& rng, std::size_t len) {
  std::string out(len, 'a');
  for (char& c : out) c = static_cast<char>('a' + rng.below(26));
  return out;
}

std::string random_unowned_bigram(Rng& rng) {
  for (;;) {
    std::string bigram = random_letters(rng, 2);
    if (!is_designated(bigram)) return bigram;
  }
}

std::string class_lastname(Rng& rng, int cls, double fidelity) {
  // total length 4-8: stem of 2-6 plus the suffix bigram
  std::string name = random_letters(rng, 2 + rng.below(5));
  if (rng.uniform() < fidelity) {
    name += kSuffixes[static_cast<std::size_t>(cls)][rng.below(3)];
  } else {
    name += random_unowned_bigram(rng);
  }
  return name;
}

}  // namespace

const std::array<std::array<std::string_view, 3>, 4>& class_suffixes() { return kSuffixes; }

std::vector<NameRecord> generate(std::uint64_t seed, const Params& params) {
  Rng rng(seed);
  std::vector<NameRecord> records;
  records.reserve(params.base_rows_per_cell * 16);
  for (int cls = 0; cls < kNumClasses; ++cls) {
    for (Gender gender : {Gender::female, Gender::male}) {
      const std::size_t rows =
          params.base_rows_per_cell * (gender == Gender::female ? 3 : 1);
      for (std::size_t i = 0; i < rows; ++i) {
        NameRecord r;
        r.first = random_letters(rng, 4 + rng.below(5));
        r.last = class_lastname(rng, cls, params.suffix_fidelity);
        r.race = static_cast<Race>(cls);
        r.gender = gender;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

std::vector<std::string> random_lastnames(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.below(4));
    names.push_back(class_lastname(rng, cls, 0.9));
  }
  return names;
}

std::vector<std::string> random_firstnames(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back(random_letters(rng, 4 + rng.below(5)));
  return names;
}

}  // namespace nameclass::toy
