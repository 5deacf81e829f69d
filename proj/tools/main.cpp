// Command-line front end for the name-ethnicity pipeline: prep, train,
// distill, predict, bench, gradcheck. Exit codes: 0 success, 1 data/runtime
// failure, 2 usage error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nameclass/csv.hpp"
#include "nameclass/dataprep.hpp"
#include "nameclass/inference.hpp"
#include "nameclass/modelio.hpp"
#include "nameclass/rng.hpp"
#include "nameclass/toy.hpp"
#include "nameclass/training.hpp"

namespace {

using namespace nameclass;

constexpr double kGradCheckThreshold = 1e-4;

// Post-parse flag violations; mapped to exit code 2 like parser errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double value, const char* fmt = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::filesystem::path sibling_path(const std::filesystem::path& model_path,
                                   const std::string& extension) {
  std::filesystem::path p = model_path;
  p.replace_extension(extension);
  return p;
}

ModelSpec train_preset_spec(const std::string& preset, NameMode mode) {
  if (preset == "teacher") return teacher_spec(mode);
  if (preset == "student") return student_spec(mode);
  return toy_teacher_spec(mode);
}

ModelSpec distill_preset_spec(const std::string& preset, NameMode mode) {
  if (preset == "teacher") return teacher_spec(mode);
  if (preset == "student") return student_spec(mode);
  return toy_student_spec(mode);
}

std::string loss_history_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
    out << (i + 1) << ',' << format_double(result.loss_history[i], "%.17g") << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// prep
// ---------------------------------------------------------------------------

struct PrepOptions {
  std::string data;
  std::string preset;
  std::string out_dir;
  std::string method = "lastname";
  std::string emit_raw;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t toy_rows = 500;
};

csv::Table records_to_table(const std::vector<NameRecord>& records) {
  csv::Table table;
  table.header = {"first", "last", "race", "gender"};
  for (const NameRecord& r : records) {
    table.rows.push_back({r.first, r.last, std::string(to_string(r.race)),
                          std::string(to_string(r.gender))});
  }
  return table;
}

int cmd_prep(const PrepOptions& opt) {
  if (opt.data.empty() && opt.preset.empty()) {
    throw UsageError("prep requires --data FILE or --preset toy");
  }
  const NameMode mode = *parse_mode(opt.method);

  std::vector<NameRecord> records;
  DropReport drops;
  if (!opt.preset.empty()) {
    toy::Params params;
    params.base_rows_per_cell = opt.toy_rows;
    records = toy::generate(opt.seed, params);
    if (!opt.emit_raw.empty()) {
      csv::write_file(opt.emit_raw, records_to_table(records));
    }
  } else {
    const csv::Table table = csv::read_file(opt.data);
    records = drop_excluded(records_from_csv(table), &drops);
  }

  const BalancedDataset balanced = undersample(records, opt.seed, /*require_all_cells=*/true);
  const SplitResult parts = split(balanced, opt.test_fraction, opt.seed);
  const EncodedDataset train_rows = encode_dataset(parts.train, mode, /*drop_missing=*/true);
  const EncodedDataset test_rows = encode_dataset(parts.test, mode, /*drop_missing=*/true);

  PrepSummary summary;
  summary.seed = opt.seed;
  summary.mode = mode;
  summary.test_fraction = opt.test_fraction;
  summary.drops = drops;
  summary.counts_before = balanced.counts_before;
  summary.group_size = balanced.group_size;
  summary.train_rows = train_rows.rows.size();
  summary.test_rows = test_rows.rows.size();
  summary.train_dropped_missing = train_rows.dropped_missing;
  summary.test_dropped_missing = test_rows.dropped_missing;
  for (const NameRecord& r : parts.train) ++summary.train_per_cell[cell_index(r.race, r.gender)];
  for (const NameRecord& r : parts.test) ++summary.test_per_cell[cell_index(r.race, r.gender)];

  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "train.csv", encoded_to_table(train_rows));
  csv::write_file(dir / "test.csv", encoded_to_table(test_rows));
  write_text_file(dir / "manifest.json", manifest_json(summary));

  std::cout << "prep: " << balanced.records.size() << " balanced rows ("
            << balanced.group_size << " per cell), train " << summary.train_rows << ", test "
            << summary.test_rows << ", wrote " << (dir / "manifest.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / distill
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string model;
  std::string teacher;  // distill only
  std::string preset = "toy";
  Hyperparams hp;
};

struct LoadedData {
  EncodedDataset train;
  EncodedDataset test;
};

LoadedData load_prep_dir(const std::string& dir) {
  const std::filesystem::path p(dir);
  LoadedData data;
  data.train = encoded_from_table(csv::read_file(p / "train.csv"));
  data.test = encoded_from_table(csv::read_file(p / "test.csv"));
  if (data.train.mode != data.test.mode) {
    throw DataError("train/test encodings disagree on mode in " + dir);
  }
  return data;
}

void write_train_artifacts(const Model& model, const TrainResult& result,
                           const EncodedDataset& test, const std::string& model_path) {
  save_model(model, model_path);
  write_text_file(sibling_path(model_path, ".loss.csv"), loss_history_csv(result));
  const EvalReport report = evaluate(model, test);
  write_text_file(sibling_path(model_path, ".eval.json"), eval_report_json(report));
  std::cout << "model " << model_path << " (" << parameter_count(model) << " parameters), "
            << result.loss_history.size() << " epochs, final loss "
            << (result.loss_history.empty() ? std::string("n/a")
                                            : format_double(result.loss_history.back()))
            << ", test accuracy " << format_double(report.accuracy, "%.4f") << "\n";
}

int cmd_train(const TrainOptions& opt) {
  const LoadedData data = load_prep_dir(opt.data);
  Model model = init_model(train_preset_spec(opt.preset, data.train.mode), opt.hp.seed);
  const TrainResult result = train(model, data.train, opt.hp);
  write_train_artifacts(model, result, data.test, opt.model);
  return 0;
}

int cmd_distill(const TrainOptions& opt) {
  const LoadedData data = load_prep_dir(opt.data);
  const Model teacher = load_model(opt.teacher);
  TrainResult result;
  const Model student =
      distill(teacher, distill_preset_spec(opt.preset, data.train.mode), data.train, opt.hp,
              &result);
  write_train_artifacts(student, result, data.test, opt.model);
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string model;
  std::string input;
  std::string output;  // empty = stdout
  std::string method;  // empty = model mode
  std::string first_col;
  std::string last_col = "lastname";
  int threads = 1;
  bool na_rm = false;
};

std::vector<std::string> column_values(const csv::Table& table, const std::string& name) {
  const int col = csv::column_index(table, name);
  if (col < 0) throw DataError("input CSV has no column '" + name + "'");
  std::vector<std::string> values;
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::string v = col < static_cast<int>(row.size()) ? row[static_cast<std::size_t>(col)] : "";
    if (v == "NA") v.clear();
    values.push_back(std::move(v));
  }
  return values;
}

int cmd_predict(const PredictOptions& opt) {
  if (!opt.method.empty() && *parse_mode(opt.method) == NameMode::fullname &&
      opt.first_col.empty()) {
    throw UsageError("--method fullname requires --first-col");
  }
  const Model model = load_model(opt.model);
  const NameMode method = opt.method.empty() ? model.spec.mode : *parse_mode(opt.method);
  if (method == NameMode::fullname && opt.first_col.empty()) {
    throw UsageError("--method fullname requires --first-col");
  }

  const csv::Table input = csv::read_file(opt.input);
  BatchRequest request;
  request.method = method;
  request.threads = opt.threads;
  request.na_rm = opt.na_rm;
  request.lastnames = column_values(input, opt.last_col);
  if (method == NameMode::fullname) {
    request.firstnames = column_values(input, opt.first_col);
  }

  const std::vector<Prediction> predictions = predict_batch(request, model);

  std::ostringstream out;
  if (method == NameMode::fullname) {
    out << "firstname,lastname,prob_asian,prob_black,prob_hispanic,prob_white,race\n";
  } else {
    out << "lastname,prob_asian,prob_black,prob_hispanic,prob_white,race\n";
  }
  for (const Prediction& p : predictions) {
    std::vector<std::string> fields;
    if (method == NameMode::fullname) fields.push_back(csv::escape(*p.firstname));
    fields.push_back(csv::escape(p.lastname));
    for (double prob : p.probs) fields.push_back(format_double(prob));
    fields.emplace_back(to_string(p.race));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out << ',';
      out << fields[i];
    }
    out << '\n';
  }

  if (opt.output.empty()) {
    std::cout << out.str();
  } else {
    write_text_file(opt.output, out.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string model;
  std::string threads = "1,2,4,8";
  std::string output;  // empty = stdout
  std::size_t n = 100000;
  int repeats = 5;
  std::uint64_t seed = 0;
};

std::vector<int> parse_thread_list(const std::string& text) {
  std::vector<int> threads;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const int t = std::stoi(item);
      if (t < 1) throw std::invalid_argument("non-positive");
      threads.push_back(t);
    } catch (const std::exception&) {
      throw UsageError("--threads expects a comma-separated list of positive integers");
    }
  }
  if (threads.empty()) throw UsageError("--threads list is empty");
  return threads;
}

int cmd_bench(const BenchOptions& opt) {
  const std::vector<int> threads = parse_thread_list(opt.threads);
  const Model model = load_model(opt.model);
  const std::vector<BenchRow> rows = throughput_bench(model, opt.n, threads, opt.repeats, opt.seed);
  std::ostringstream out;
  out << "threads,n,mean_seconds\n";
  for (const BenchRow& row : rows) {
    out << row.threads << ',' << row.n << ',' << format_double(row.mean_seconds) << '\n';
  }
  if (opt.output.empty()) {
    std::cout << out.str();
  } else {
    write_text_file(opt.output, out.str());
    std::cout << "bench: wrote " << opt.output << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckOptions {
  std::string preset = "toy";
  std::uint64_t seed = 0;
  int configs = 20;
  double epsilon = 1e-5;
};

ModelSpec tiny_spec(const std::string& preset, NameMode mode, Rng& rng) {
  const int dim = 2 + static_cast<int>(rng.below(3));     // 2..4
  const int hidden = 2 + static_cast<int>(rng.below(2));  // 2..3
  int layers = 0;
  if (preset == "teacher") layers = 4;
  else if (preset == "student") layers = 2;
  else layers = 1 + static_cast<int>(rng.below(2));  // toy: 1..2
  ModelSpec spec;
  spec.mode = mode;
  spec.layers.push_back({LayerKind::embedding, dim, false, Activation::none});
  for (int i = 0; i < layers; ++i) {
    spec.layers.push_back({LayerKind::bilstm, hidden, i + 1 < layers, Activation::none});
  }
  spec.layers.push_back({LayerKind::dense, kNumClasses, false, Activation::softmax});
  return spec;
}

std::vector<EncodedRow> random_rows(NameMode mode, std::size_t count, Rng& rng) {
  std::vector<EncodedRow> rows(count);
  for (EncodedRow& row : rows) {
    row.label = static_cast<int>(rng.below(kNumClasses));
    row.indices.resize(static_cast<std::size_t>(input_length(mode)));
    for (int& idx : row.indices) idx = static_cast<int>(rng.below(kDictionarySize));
  }
  return rows;
}

int cmd_gradcheck(const GradcheckOptions& opt) {
  Rng rng(opt.seed);
  double worst = 0.0;
  for (int i = 0; i < opt.configs; ++i) {
    const NameMode mode = (i % 2 == 0) ? NameMode::lastname : NameMode::fullname;
    Rng config_rng = rng.fork(static_cast<std::uint64_t>(i));
    const ModelSpec spec = tiny_spec(opt.preset, mode, config_rng);
    Model model = init_model(spec, config_rng.next_u64());
    const std::vector<EncodedRow> rows = random_rows(mode, 3, config_rng);
    const double err = grad_check(model, rows, opt.epsilon);
    std::cout << "config " << i << " mode=" << to_string(mode)
              << " params=" << parameter_count(model)
              << " max_rel_err=" << format_double(err, "%.3e") << "\n";
    worst = std::max(worst, err);
  }
  std::cout << "max_relative_error=" << format_double(worst, "%.6e")
            << " threshold=" << format_double(kGradCheckThreshold, "%.0e") << "\n";
  return worst <= kGradCheckThreshold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-level BiLSTM engine for predicting ethnicity from names"};
  app.require_subcommand(1);

  PrepOptions prep_opt;
  CLI::App* prep = app.add_subcommand("prep", "balance, split and encode a labeled corpus");
  prep->add_option("--data", prep_opt.data, "input CSV with header first,last,race,gender");
  prep->add_option("--preset", prep_opt.preset, "generate the synthetic toy corpus")
      ->check(CLI::IsMember({"toy"}));
  prep->add_option("--out-dir", prep_opt.out_dir, "output directory")->required();
  prep->add_option("--method", prep_opt.method, "lastname or fullname encoding")
      ->check(CLI::IsMember({"lastname", "fullname"}));
  prep->add_option("--seed", prep_opt.seed, "RNG seed");
  prep->add_option("--test-fraction", prep_opt.test_fraction, "held-out share per cell")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  prep->add_option("--toy-rows", prep_opt.toy_rows, "base rows per cell for the toy corpus");
  prep->add_option("--emit-raw", prep_opt.emit_raw, "also write the raw toy corpus CSV here");

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a prepped dataset");
  train_cmd->add_option("--data", train_opt.data, "prep output directory")->required();
  train_cmd->add_option("--model", train_opt.model, "output model file")->required();
  train_cmd->add_option("--preset", train_opt.preset, "teacher, student or toy")
      ->check(CLI::IsMember({"teacher", "student", "toy"}));
  train_cmd->add_option("--epochs", train_opt.hp.epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch-size", train_opt.hp.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_opt.hp.learning_rate)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train_opt.hp.seed, "RNG seed");

  TrainOptions distill_opt;
  CLI::App* distill_cmd =
      app.add_subcommand("distill", "distill a trained teacher into a smaller student");
  distill_cmd->add_option("--data", distill_opt.data, "prep output directory")->required();
  distill_cmd->add_option("--teacher", distill_opt.teacher, "trained teacher model file")
      ->required();
  distill_cmd->add_option("--model", distill_opt.model, "output student model file")->required();
  distill_cmd->add_option("--preset", distill_opt.preset, "teacher, student or toy")
      ->check(CLI::IsMember({"teacher", "student", "toy"}));
  distill_cmd->add_option("--epochs", distill_opt.hp.epochs)->check(CLI::NonNegativeNumber);
  distill_cmd->add_option("--batch-size", distill_opt.hp.batch_size)->check(CLI::PositiveNumber);
  distill_cmd->add_option("--lr", distill_opt.hp.learning_rate)->check(CLI::NonNegativeNumber);
  distill_cmd->add_option("--temperature", distill_opt.hp.temperature)
      ->check(CLI::PositiveNumber);
  distill_cmd->add_option("--alpha", distill_opt.hp.alpha)->check(CLI::Range(0.0, 1.0));
  distill_cmd->add_option("--seed", distill_opt.hp.seed, "RNG seed");

  PredictOptions predict_opt;
  CLI::App* predict_cmd = app.add_subcommand("predict", "batch-predict ethnicity from a CSV");
  predict_cmd->add_option("--model", predict_opt.model, "model file")->required();
  predict_cmd->add_option("--input", predict_opt.input, "input CSV")->required();
  predict_cmd->add_option("--output", predict_opt.output, "output CSV (default: stdout)");
  predict_cmd->add_option("--method", predict_opt.method, "fullname or lastname")
      ->check(CLI::IsMember({"lastname", "fullname"}));
  predict_cmd->add_option("--first-col", predict_opt.first_col,
                          "input column holding first names (required for fullname)");
  predict_cmd->add_option("--last-col", predict_opt.last_col,
                          "input column holding last names");
  predict_cmd->add_option("--threads", predict_opt.threads)->check(CLI::PositiveNumber);
  predict_cmd->add_flag("--na-rm", predict_opt.na_rm, "drop rows with missing names");

  BenchOptions bench_opt;
  CLI::App* bench_cmd = app.add_subcommand("bench", "measure batch inference throughput");
  bench_cmd->add_option("--model", bench_opt.model, "model file")->required();
  bench_cmd->add_option("--threads", bench_opt.threads, "comma-separated thread counts");
  bench_cmd->add_option("--n", bench_opt.n, "names per run")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench_opt.repeats, "timed runs per thread count")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_opt.seed, "RNG seed for synthetic names");
  bench_cmd->add_option("--output", bench_opt.output, "timing CSV (default: stdout)");

  GradcheckOptions gradcheck_opt;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  gradcheck_cmd->add_option("--preset", gradcheck_opt.preset, "layer structure to check")
      ->check(CLI::IsMember({"teacher", "student", "toy"}));
  gradcheck_cmd->add_option("--seed", gradcheck_opt.seed, "RNG seed");
  gradcheck_cmd->add_option("--configs", gradcheck_opt.configs, "random configurations to run")
      ->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--epsilon", gradcheck_opt.epsilon, "central-difference step")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (prep->parsed()) return cmd_prep(prep_opt);
    if (train_cmd->parsed()) return cmd_train(train_opt);
    if (distill_cmd->parsed()) return cmd_distill(distill_opt);
    if (predict_cmd->parsed()) return cmd_predict(predict_opt);
    if (bench_cmd->parsed()) return cmd_bench(bench_opt);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_opt);
  } catch (const UsageError& e) {
    std::cerr << "nameclass: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "nameclass: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
