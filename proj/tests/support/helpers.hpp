#pragma once

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mg/condlm.hpp"
#include "mg/scorer.hpp"
#include "mg/text.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("mg-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline mg::TokenSequence random_tokens(std::mt19937_64& rng, const std::vector<std::string>& alphabet,
                                       std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  mg::TokenSequence out(len(rng));
  for (auto& t : out) t = alphabet[pick(rng)];
  return out;
}

// A small random model over the first `n_words` of a fixed alphabet.
inline mg::CondLmModel random_toy_model(std::mt19937_64& rng, std::size_t n_words, int order) {
  static const std::vector<std::string> kWords{"a", "b", "c", "d", "e", "f"};
  const std::vector<std::string> words(kWords.begin(), kWords.begin() + n_words);
  std::uniform_int_distribution<int> n_pairs(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  mg::ParallelCorpus corpus;
  const int pairs = n_pairs(rng);
  for (int i = 0; i < pairs; ++i) {
    corpus.emplace_back(random_tokens(rng, words, 0, 4), random_tokens(rng, words, 0, 4));
  }
  // Make sure every word is in the vocabulary.
  corpus.emplace_back(mg::TokenSequence{}, words);
  mg::CondLmConfig config;
  config.order = order;
  config.copy_weight = 0.8 * unit(rng);
  config.copy_alpha = 0.05 + unit(rng);
  for (int o = 0; o < order; ++o) config.interp_weights.push_back(0.1 + unit(rng));
  double sum = 0;
  for (double w : config.interp_weights) sum += w;
  for (double& w : config.interp_weights) w /= sum;
  return mg::CondLmModel::train(corpus, config);
}

// Reference-free scorer over (source, candidate) for optimizer tests.
class LambdaScorer final : public mg::Scorer {
 public:
  using Fn = std::function<double(const mg::TokenSequence&, const mg::TokenSequence&)>;
  LambdaScorer(std::string name, Fn fn, mg::ScorerKind kind = mg::ScorerKind::reference_free)
      : fn_(std::move(fn)) {
    info_.name = std::move(name);
    info_.kind = kind;
  }
  const mg::ScorerInfo& info() const override { return info_; }
  double evaluate(const mg::TokenSequence& source, const mg::TokenSequence& candidate,
                  const mg::TokenSequence* reference, std::string_view) const override {
    if (reference != nullptr) ++seen_references;
    return fn_(source, candidate);
  }
  mutable int seen_references = 0;

 private:
  mg::ScorerInfo info_;
  Fn fn_;
};

}  // namespace testing_support
