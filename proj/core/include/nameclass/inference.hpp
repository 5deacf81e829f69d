#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nameclass/model.hpp"
#include "nameclass/types.hpp"

namespace nameclass {

struct Prediction {
  std::optional<std::string> firstname;  // absent in lastname mode
  std::string lastname;
  Vec4 probs{};  // prob_asian, prob_black, prob_hispanic, prob_white
  Race race = Race::asian;
};

struct BatchRequest {
  std::optional<std::vector<std::string>> firstnames;
  std::vector<std::string> lastnames;
  NameMode method = NameMode::lastname;
  int threads = 1;  // a cap: actual workers never exceed the work available
  bool na_rm = false;
};

// Contiguous, disjoint ranges covering [0, n); at most `threads` of them,
// sizes differing by at most one.
std::vector<std::pair<std::size_t, std::size_t>> partition_work(std::size_t n, int threads);

// One prediction per retained input row, in input order. A missing value is
// a required component that is empty after trimming whitespace; such rows
// are dropped when na_rm is set and are an error naming the first offending
// row index otherwise. The model is shared read-only across the worker pool
// and results go to pre-assigned slots, so output is bitwise identical for
// any thread count.
std::vector<Prediction> predict_batch(const BatchRequest& request, const Model& model);

struct BenchRow {
  int threads = 0;
  std::size_t n = 0;
  double mean_seconds = 0.0;
};

// Mean wall time of predict_batch over `repeats` runs on n synthetic names,
// one row per requested thread count.
std::vector<BenchRow> throughput_bench(const Model& model, std::size_t n,
                                       const std::vector<int>& thread_counts, int repeats,
                                       std::uint64_t seed = 0);

}  // namespace nameclass
