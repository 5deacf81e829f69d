#include <benchmark/benchmark.h>

#include "nameclass/encoding.hpp"
#include "nameclass/inference.hpp"
#include "nameclass/toy.hpp"

using namespace nameclass;

namespace {

void BM_encode_lastname(benchmark::State& state) {
  const auto names = toy::random_lastnames(1, 1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_lastname(names[i % names.size()]));
    ++i;
  }
}
BENCHMARK(BM_encode_lastname);

void BM_model_forward_student(benchmark::State& state) {
  const Model model = init_model(student_spec(NameMode::lastname), 1);
  const EncodedName name = encode_lastname("christensen");
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_forward(model, name));
  }
}
BENCHMARK(BM_model_forward_student);

void BM_predict_batch_student(benchmark::State& state) {
  const Model model = init_model(student_spec(NameMode::lastname), 1);
  BatchRequest request;
  request.method = NameMode::lastname;
  request.lastnames = toy::random_lastnames(2, 2048);
  request.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_batch(request, model));
  }
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_predict_batch_student)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_predict_batch_toy_student(benchmark::State& state) {
  const Model model = init_model(toy_student_spec(NameMode::lastname), 1);
  BatchRequest request;
  request.method = NameMode::lastname;
  request.lastnames = toy::random_lastnames(2, 4096);
  request.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_batch(request, model));
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_predict_batch_toy_student)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
