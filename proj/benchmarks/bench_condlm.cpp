#include <benchmark/benchmark.h>

#include "mg/condlm.hpp"
#include "mg/data_io.hpp"
#include "mg/optimize.hpp"

namespace {

struct Fixture {
  mg::SyntheticBenchmark bench = mg::generate_synthetic_benchmark(7, 200, 1, {0.0});
  std::vector<mg::TokenSequence> sources, references;
  mg::CondLmModel model = mg::CondLmModel::train(corpus());

  mg::ParallelCorpus corpus() {
    mg::ParallelCorpus out;
    for (const auto& seg : bench.segments) {
      sources.push_back(mg::tokenize(seg.source));
      references.push_back(mg::tokenize(*seg.reference));
      out.emplace_back(sources.back(), references.back());
    }
    return out;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Train(benchmark::State& state) {
  const auto& f = fixture();
  mg::ParallelCorpus corpus;
  for (std::size_t i = 0; i < f.sources.size(); ++i) corpus.emplace_back(f.sources[i], f.references[i]);
  for (auto _ : state) benchmark::DoNotOptimize(mg::CondLmModel::train(corpus));
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mg::condlm_score(f.model, f.sources[i], f.references[i]));
    i = (i + 1) % f.sources.size();
  }
}
BENCHMARK(BM_Score);

void BM_Decode(benchmark::State& state) {
  const auto& f = fixture();
  const mg::DecodeConfig config{static_cast<int>(state.range(0)), 24};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mg::direct_decode(f.model, f.sources[i], config));
    i = (i + 1) % f.sources.size();
  }
}
BENCHMARK(BM_Decode)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
