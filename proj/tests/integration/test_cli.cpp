// Exercises the installed command-line surface end to end: exit codes,
// output headers, artifact files. Spawns the real binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "procutil.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = NAMECLASS_CLI_PATH;

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(procutil::run(kCli + " 2>/dev/null").exit_code == 2);           // missing subcommand
  CHECK(procutil::run(kCli + " frobnicate 2>/dev/null").exit_code == 2);
  CHECK(procutil::run(kCli + " predict 2>/dev/null").exit_code == 2);   // missing required flags
  CHECK(procutil::run(kCli + " prep --no-such-flag 2>/dev/null").exit_code == 2);
  CHECK(procutil::run(kCli + " predict --model m --input i --method sideways 2>/dev/null")
            .exit_code == 2);
  CHECK(procutil::run(kCli + " --help >/dev/null 2>&1").exit_code == 0);
  CHECK(procutil::run(kCli + " predict --help >/dev/null 2>&1").exit_code == 0);
}

TEST_CASE("toy pipeline through the CLI") {
  const fs::path dir = procutil::scratch_dir("cli_scratch");
  const fs::path prep_dir = dir / "prep";
  const fs::path model = dir / "teacher.json";
  const fs::path student = dir / "student.json";

  // prep (toy corpus, fullname so predict can exercise both columns)
  const auto prep = procutil::run(kCli + " prep --preset toy --toy-rows 24 --seed 5" +
                                  " --method fullname --out-dir " + q(prep_dir) +
                                  " --emit-raw " + q(dir / "raw.csv") + " 2>&1");
  CHECK(prep.exit_code == 0);
  CHECK(fs::exists(prep_dir / "train.csv"));
  CHECK(fs::exists(prep_dir / "test.csv"));
  const std::string manifest = procutil::read_file(prep_dir / "manifest.json");
  CHECK(manifest.find("\"group_size\": 24") != std::string::npos);
  const std::string raw = procutil::read_file(dir / "raw.csv");
  CHECK(raw.rfind("first,last,race,gender\n", 0) == 0);
  // 4 classes x (3x + 1x) x 24 base rows, plus the header line
  CHECK(std::count(raw.begin(), raw.end(), '\n') == 4 * (3 * 24 + 24) + 1);

  // train a tiny model for a couple of epochs
  const auto train = procutil::run(kCli + " train --data " + q(prep_dir) + " --preset toy" +
                                   " --epochs 2 --batch-size 16 --seed 1 --model " + q(model) +
                                   " 2>&1");
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(dir / "teacher.loss.csv"));
  CHECK(fs::exists(dir / "teacher.eval.json"));
  const std::string history = procutil::read_file(dir / "teacher.loss.csv");
  CHECK(history.rfind("epoch,mean_loss\n", 0) == 0);

  // distill a smaller student from it
  const auto distill = procutil::run(kCli + " distill --data " + q(prep_dir) + " --teacher " +
                                     q(model) + " --preset toy --epochs 1 --seed 2 --model " +
                                     q(student) + " 2>&1");
  CHECK(distill.exit_code == 0);
  CHECK(fs::exists(student));

  // predict: header is byte-exact, rows preserved in order
  const fs::path input = dir / "names.csv";
  procutil::write_file(input,
                       "firstname,lastname\nSamuel,Jackson\nMin,Chen\nMaria,Garcia\n");
  const auto predict = procutil::run(kCli + " predict --model " + q(model) +
                                     " --method fullname --first-col firstname" +
                                     " --last-col lastname --input " + q(input) + " 2>/dev/null");
  CHECK(predict.exit_code == 0);
  CHECK(predict.output.rfind(
            "firstname,lastname,prob_asian,prob_black,prob_hispanic,prob_white,race\n", 0) == 0);
  CHECK(predict.output.find("Samuel,Jackson,") != std::string::npos);

  // method defaults to the model's mode
  const auto defaulted = procutil::run(kCli + " predict --model " + q(model) +
                                       " --first-col firstname --last-col lastname --input " +
                                       q(input) + " 2>/dev/null");
  CHECK(defaulted.exit_code == 0);
  CHECK(defaulted.output == predict.output);

  // fullname without --first-col is a usage error
  CHECK(procutil::run(kCli + " predict --model " + q(model) +
                      " --method fullname --last-col lastname --input " + q(input) +
                      " 2>/dev/null")
            .exit_code == 2);

  // empty input: header only, success
  const fs::path empty = dir / "empty.csv";
  procutil::write_file(empty, "firstname,lastname\n");
  const auto empty_run = procutil::run(kCli + " predict --model " + q(model) +
                                       " --method fullname --first-col firstname" +
                                       " --last-col lastname --input " + q(empty) +
                                       " 2>/dev/null");
  CHECK(empty_run.exit_code == 0);
  CHECK(empty_run.output ==
        "firstname,lastname,prob_asian,prob_black,prob_hispanic,prob_white,race\n");

  // missing values: exit 1 without --na-rm (diagnostic names the row), drop with it
  const fs::path holes = dir / "holes.csv";
  procutil::write_file(holes, "firstname,lastname\nAnn,Smith\nNA,Chen\nBo,\n");
  CHECK(procutil::run(kCli + " predict --model " + q(model) +
                      " --method fullname --first-col firstname --last-col lastname --input " +
                      q(holes) + " 2>/dev/null")
            .exit_code == 1);
  const auto na_rm = procutil::run(kCli + " predict --model " + q(model) +
                                   " --method fullname --first-col firstname" +
                                   " --last-col lastname --na-rm --input " + q(holes) +
                                   " 2>/dev/null");
  CHECK(na_rm.exit_code == 0);
  // 3 inputs, 2 missing -> 1 data row + header
  CHECK(std::count(na_rm.output.begin(), na_rm.output.end(), '\n') == 2);

  // data errors exit with code 1
  CHECK(procutil::run(kCli + " predict --model " + q(dir / "missing.json") +
                      " --input " + q(input) + " --last-col lastname 2>/dev/null")
            .exit_code == 1);
  CHECK(procutil::run(kCli + " train --data " + q(dir / "nowhere") + " --model " +
                      q(dir / "x.json") + " 2>/dev/null")
            .exit_code == 1);

  // bench: CSV shape
  const auto bench = procutil::run(kCli + " bench --model " + q(student) +
                                   " --threads 1,2 --n 64 --repeats 1 2>/dev/null");
  CHECK(bench.exit_code == 0);
  CHECK(bench.output.rfind("threads,n,mean_seconds\n", 0) == 0);
  CHECK(std::count(bench.output.begin(), bench.output.end(), '\n') == 3);

  fs::remove_all(dir);
}

TEST_CASE("gradcheck subcommand") {
  const auto ok = procutil::run(kCli + " gradcheck --configs 2 --seed 3 2>/dev/null");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("max_relative_error=") != std::string::npos);
}

TEST_CASE("prep requires an input source and an output directory") {
  CHECK(procutil::run(kCli + " prep --preset toy 2>/dev/null").exit_code == 2);
  const fs::path dir = procutil::scratch_dir("cli_scratch_prep");
  CHECK(procutil::run(kCli + " prep --out-dir " + q(dir / "d") + " 2>/dev/null").exit_code == 2);
  fs::remove_all(dir);
}
