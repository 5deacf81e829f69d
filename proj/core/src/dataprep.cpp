#include "nameclass/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nameclass/rng.hpp"

namespace nameclass {

namespace {

std::string cell_name(int cell) {
  const Race race = static_cast<Race>(cell / 2);
  const Gender gender = static_cast<Gender>(cell % 2);
  return std::string(to_string(race)) + "/" + std::string(to_string(gender));
}

bool missing_value(std::string_view text) { return trim(text).empty(); }

}  // namespace

std::vector<RawRecord> records_from_csv(const csv::Table& table) {
  const int first_col = csv::column_index(table, "first");
  const int last_col = csv::column_index(table, "last");
  const int race_col = csv::column_index(table, "race");
  const int gender_col = csv::column_index(table, "gender");
  for (const auto& [name, col] : {std::pair{"first", first_col}, {"last", last_col},
                                  {"race", race_col}, {"gender", gender_col}}) {
    if (col < 0) throw DataError(std::string("input CSV is missing column '") + name + "'");
  }
  auto get = [](const std::vector<std::string>& row, int col) -> std::string {
    if (col >= static_cast<int>(row.size())) return "";
    const std::string& v = row[static_cast<std::size_t>(col)];
    return v == "NA" ? std::string() : v;
  };
  std::vector<RawRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    records.push_back({get(row, first_col), get(row, last_col), get(row, race_col),
                       get(row, gender_col)});
  }
  return records;
}

std::vector<NameRecord> drop_excluded(const std::vector<RawRecord>& raw, DropReport* report) {
  DropReport drops;
  std::vector<NameRecord> kept;
  kept.reserve(raw.size());
  for (const RawRecord& r : raw) {
    const auto race = parse_race(r.race);
    if (!race) {
      ++drops.excluded_race;
      continue;
    }
    const auto gender = parse_gender(r.gender);
    if (!gender) {
      ++drops.missing_gender;
      continue;
    }
    kept.push_back({r.first, r.last, *race, *gender});
  }
  if (report) *report = drops;
  return kept;
}

BalancedDataset undersample(const std::vector<NameRecord>& records, std::uint64_t seed,
                            bool require_all_cells) {
  std::array<std::vector<std::size_t>, kNumCells> cells;
  for (std::size_t i = 0; i < records.size(); ++i) {
    cells[cell_index(records[i].race, records[i].gender)].push_back(i);
  }
  if (require_all_cells) {
    for (int cell = 0; cell < kNumCells; ++cell) {
      if (cells[cell].empty()) {
        throw DataError("undersample: empty cell " + cell_name(cell));
      }
    }
  }

  std::size_t group_size = std::numeric_limits<std::size_t>::max();
  bool any = false;
  for (const auto& cell : cells) {
    if (cell.empty()) continue;
    any = true;
    group_size = std::min(group_size, cell.size());
  }
  if (!any) throw DataError("undersample: no records in any cell");

  BalancedDataset out;
  out.seed = seed;
  out.group_size = group_size;
  Rng rng(seed);
  for (int cell = 0; cell < kNumCells; ++cell) {
    out.counts_before[cell] = cells[cell].size();
    if (cells[cell].empty()) continue;
    Rng cell_rng = rng.fork(static_cast<std::uint64_t>(cell));
    const std::vector<std::size_t> picks =
        cell_rng.sample_without_replacement(cells[cell].size(), group_size);
    for (std::size_t p : picks) out.records.push_back(records[cells[cell][p]]);
  }
  return out;
}

namespace detail {

std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& cell_sizes,
                                                double test_fraction) {
  const std::size_t k = cell_sizes.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> remainders(k, 0.0);
  std::size_t total = 0;
  std::size_t allocated = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double raw = static_cast<double>(cell_sizes[i]) * test_fraction;
    counts[i] = static_cast<std::size_t>(std::floor(raw));
    remainders[i] = raw - static_cast<double>(counts[i]);
    total += cell_sizes[i];
    allocated += counts[i];
  }
  const auto target = static_cast<std::size_t>(
      std::llround(static_cast<double>(total) * test_fraction));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; i < k && allocated < target; ++i) {
    ++counts[order[i]];
    ++allocated;
  }
  return counts;
}

}  // namespace detail

SplitResult split(const BalancedDataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("split: test fraction must lie in (0, 1)");
  }
  std::array<std::vector<std::size_t>, kNumCells> cells;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const NameRecord& r = dataset.records[i];
    cells[cell_index(r.race, r.gender)].push_back(i);
  }

  std::vector<int> present;
  std::vector<std::size_t> sizes;
  for (int cell = 0; cell < kNumCells; ++cell) {
    if (!cells[cell].empty()) {
      present.push_back(cell);
      sizes.push_back(cells[cell].size());
    }
  }
  if (present.empty()) throw DataError("split: empty dataset");

  const std::vector<std::size_t> test_counts = detail::stratified_test_counts(sizes, test_fraction);

  SplitResult result;
  Rng rng(seed);
  for (std::size_t ci = 0; ci < present.size(); ++ci) {
    const int cell = present[ci];
    const std::size_t n = sizes[ci];
    const std::size_t n_test = test_counts[ci];
    if (n_test == 0 || n_test >= n) {
      throw DataError("split: test fraction " + std::to_string(test_fraction) +
                      " leaves an empty side in cell " + cell_name(cell));
    }
    Rng cell_rng = rng.fork(static_cast<std::uint64_t>(cell));
    const std::vector<std::size_t> picks = cell_rng.sample_without_replacement(n, n_test);
    std::vector<bool> is_test(n, false);
    for (std::size_t p : picks) is_test[p] = true;
    for (std::size_t p = 0; p < n; ++p) {
      const NameRecord& r = dataset.records[cells[cell][p]];
      (is_test[p] ? result.test : result.train).push_back(r);
    }
  }
  return result;
}

EncodedDataset encode_dataset(const std::vector<NameRecord>& records, NameMode mode,
                              bool drop_missing) {
  EncodedDataset out;
  out.mode = mode;
  out.rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const NameRecord& r = records[i];
    const bool missing = mode == NameMode::lastname
                             ? missing_value(r.last)
                             : (missing_value(r.first) || missing_value(r.last));
    if (missing) {
      if (!drop_missing) {
        throw DataError("record " + std::to_string(i) + " is missing a required name component");
      }
      ++out.dropped_missing;
      continue;
    }
    EncodedRow row;
    row.label = static_cast<int>(r.race);
    row.indices = mode == NameMode::lastname ? encode_lastname(r.last).indices
                                             : encode_fullname(r.first, r.last).indices;
    out.rows.push_back(std::move(row));
  }
  return out;
}

csv::Table encoded_to_table(const EncodedDataset& dataset) {
  csv::Table table;
  const int length = input_length(dataset.mode);
  table.header.push_back("label");
  for (int i = 0; i < length; ++i) table.header.push_back("c" + std::to_string(i));
  for (const EncodedRow& row : dataset.rows) {
    std::vector<std::string> fields;
    fields.reserve(static_cast<std::size_t>(length) + 1);
    fields.push_back(std::to_string(row.label));
    for (int v : row.indices) fields.push_back(std::to_string(v));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

EncodedDataset encoded_from_table(const csv::Table& table) {
  EncodedDataset out;
  const std::size_t width = table.header.size();
  if (width == kLastnameLength + 1) {
    out.mode = NameMode::lastname;
  } else if (width == kFullnameLength + 1) {
    out.mode = NameMode::fullname;
  } else {
    throw DataError("encoded dataset: unexpected column count " + std::to_string(width));
  }
  if (table.header.empty() || table.header[0] != "label") {
    throw DataError("encoded dataset: first column must be 'label'");
  }
  auto parse_int = [](const std::string& field, std::size_t row) {
    try {
      std::size_t consumed = 0;
      const int v = std::stoi(field, &consumed);
      if (consumed != field.size()) throw std::invalid_argument(field);
      return v;
    } catch (const std::exception&) {
      throw DataError("encoded dataset: row " + std::to_string(row) +
                      " has a non-integer field '" + field + "'");
    }
  };
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& fields = table.rows[i];
    if (fields.size() != width) {
      throw DataError("encoded dataset: row " + std::to_string(i) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    }
    EncodedRow row;
    row.label = parse_int(fields[0], i);
    if (row.label < 0 || row.label >= kNumClasses) {
      throw DataError("encoded dataset: row " + std::to_string(i) + " has label out of range");
    }
    row.indices.reserve(width - 1);
    for (std::size_t c = 1; c < width; ++c) {
      const int v = parse_int(fields[c], i);
      if (v < 0 || v >= kDictionarySize) {
        throw DataError("encoded dataset: row " + std::to_string(i) + " has index out of range");
      }
      row.indices.push_back(v);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string manifest_json(const PrepSummary& summary) {
  nlohmann::ordered_json root;
  root["seed"] = summary.seed;
  root["mode"] = std::string(to_string(summary.mode));
  root["test_fraction"] = summary.test_fraction;
  root["dropped"] = {{"excluded_race", summary.drops.excluded_race},
                     {"missing_gender", summary.drops.missing_gender},
                     {"missing_name_train", summary.train_dropped_missing},
                     {"missing_name_test", summary.test_dropped_missing}};
  root["group_size"] = summary.group_size;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (int cell = 0; cell < kNumCells; ++cell) {
    nlohmann::ordered_json c;
    c["race"] = std::string(to_string(static_cast<Race>(cell / 2)));
    c["gender"] = std::string(to_string(static_cast<Gender>(cell % 2)));
    c["before"] = summary.counts_before[cell];
    c["after"] = summary.group_size;
    c["train"] = summary.train_per_cell[cell];
    c["test"] = summary.test_per_cell[cell];
    cells.push_back(std::move(c));
  }
  root["cells"] = std::move(cells);
  root["rows"] = {{"train", summary.train_rows}, {"test", summary.test_rows}};
  return root.dump(2) + "\n";
}

}  // namespace nameclass
