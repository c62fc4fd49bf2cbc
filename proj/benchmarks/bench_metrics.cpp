#include <benchmark/benchmark.h>

#include <random>

#include "mg/analysis.hpp"
#include "mg/metrics.hpp"

namespace {

mg::TokenSequence random_sentence(std::mt19937_64& rng, std::size_t length) {
  static const std::vector<std::string> words{"the", "a", "cat", "dog", "sees", "runs", "red", "big", "quickly", "."};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  mg::TokenSequence out;
  for (std::size_t i = 0; i < length; ++i) out.push_back(words[pick(rng)]);
  return out;
}

struct Corpus {
  std::vector<mg::TokenSequence> candidates, references;

  explicit Corpus(std::size_t segments, std::size_t length = 24) {
    std::mt19937_64 rng(11);
    for (std::size_t i = 0; i < segments; ++i) {
      candidates.push_back(random_sentence(rng, length));
      references.push_back(random_sentence(rng, length));
    }
  }
};

void BM_CorpusBleu(benchmark::State& state) {
  const Corpus c(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mg::bleu(c.candidates, c.references));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(1000);

void BM_SentenceBleu(benchmark::State& state) {
  const Corpus c(1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mg::sentence_bleu(c.candidates[0], c.references[0]));
}
BENCHMARK(BM_SentenceBleu)->Arg(16)->Arg(64);

void BM_RougeL(benchmark::State& state) {
  const Corpus c(1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mg::rouge_l(c.candidates[0], c.references[0]));
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(128);

void BM_TokenF1(benchmark::State& state) {
  const Corpus c(1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mg::token_f1(c.candidates[0], c.references[0]));
}
BENCHMARK(BM_TokenF1)->Arg(16)->Arg(128);

void BM_Pearson(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = normal(rng);
    y[i] = x[i] + normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(mg::pearson(x, y));
}
BENCHMARK(BM_Pearson)->Arg(10)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
