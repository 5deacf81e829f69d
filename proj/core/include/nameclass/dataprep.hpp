#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nameclass/csv.hpp"
#include "nameclass/encoding.hpp"
#include "nameclass/types.hpp"

namespace nameclass {

struct NameRecord {
  std::string first;
  std::string last;
  Race race = Race::asian;
  Gender gender = Gender::female;
};

// A row as it appears in the input file, labels still raw text.
struct RawRecord {
  std::string first;
  std::string last;
  std::string race;
  std::string gender;
};

// Expects columns first,last,race,gender (extra columns ignored). The
// literal "NA" is read as an empty value.
std::vector<RawRecord> records_from_csv(const csv::Table& table);

struct DropReport {
  std::size_t excluded_race = 0;   // labels outside the four classes
  std::size_t missing_gender = 0;  // unparseable or absent gender labels
};

// Keeps only rows whose race is one of the four retained categories and
// whose gender parses; counts of everything dropped are reported.
std::vector<NameRecord> drop_excluded(const std::vector<RawRecord>& raw,
                                      DropReport* report = nullptr);

inline constexpr int kNumCells = kNumClasses * 2;

// Canonical cell enumeration: race-major, gender-minor (asian/female first).
constexpr int cell_index(Race race, Gender gender) {
  return static_cast<int>(race) * 2 + static_cast<int>(gender);
}

struct BalancedDataset {
  std::vector<NameRecord> records;
  std::size_t group_size = 0;
  std::uint64_t seed = 0;
  std::array<std::size_t, kNumCells> counts_before{};  // per canonical cell
};

// Uniform sampling without replacement from each (race, gender) cell down to
// the smallest cell's size; deterministic given the seed. Cells absent from
// the input are ignored unless require_all_cells is set, in which case a
// missing cell is an error naming the cell.
BalancedDataset undersample(const std::vector<NameRecord>& records, std::uint64_t seed,
                            bool require_all_cells = false);

struct SplitResult {
  std::vector<NameRecord> train;
  std::vector<NameRecord> test;
};

// Stratified by cell: per-cell test counts allocated by largest remainder so
// the overall test share matches the fraction to within one row per cell;
// a fraction that empties either side of any cell is an error.
SplitResult split(const BalancedDataset& dataset, double test_fraction, std::uint64_t seed);

struct EncodedRow {
  std::vector<int> indices;
  int label = 0;  // position of the race in [asian, black, hispanic, white]
};

struct EncodedDataset {
  NameMode mode = NameMode::lastname;
  std::vector<EncodedRow> rows;
  std::size_t dropped_missing = 0;
};

// Encodes one row per record. Records missing a required component (last
// name; both names in fullname mode) are dropped when drop_missing, and an
// error naming the first offending row otherwise.
EncodedDataset encode_dataset(const std::vector<NameRecord>& records, NameMode mode,
                              bool drop_missing = true);

// Encoded dataset file: CSV of integers with header label,c0,...,c{L-1}.
csv::Table encoded_to_table(const EncodedDataset& dataset);
EncodedDataset encoded_from_table(const csv::Table& table);

namespace detail {
// Largest-remainder allocation of per-cell test counts for a stratified
// split; exposed for direct testing.
std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& cell_sizes,
                                                double test_fraction);
}  // namespace detail

// Prep manifest (JSON text): seed, mode, fraction, per-cell before/after
// counts and split sizes, drop counts.
struct PrepSummary {
  std::uint64_t seed = 0;
  NameMode mode = NameMode::lastname;
  double test_fraction = 0.0;
  DropReport drops;
  std::array<std::size_t, kNumCells> counts_before{};
  std::size_t group_size = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t train_dropped_missing = 0;
  std::size_t test_dropped_missing = 0;
  std::array<std::size_t, kNumCells> train_per_cell{};
  std::array<std::size_t, kNumCells> test_per_cell{};
};

std::string manifest_json(const PrepSummary& summary);

}  // namespace nameclass
