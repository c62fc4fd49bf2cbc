#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mg/scorer.hpp"
#include "mg/text.hpp"

namespace mg {

using TokenId = std::int32_t;

struct CondLmConfig {
  int order = 3;
  // Mixture weight of the source copy distribution, in [0, 1).
  double copy_weight = 0.3;
  // Additive smoothing of the copy distribution, > 0.
  double copy_alpha = 0.1;
  // One weight per order (index 0 = unigram). Empty means uniform.
  std::vector<double> interp_weights;
  // Tokenizer the training text went through; scoring must match it.
  TokenizerConfig tokenizer;
};

using ParallelCorpus = std::vector<std::pair<TokenSequence, TokenSequence>>;

// Source-conditioned n-gram language model:
//
//   p(token | history, source) = (1 - copy_weight) * p_lm + copy_weight * p_copy
//   p_lm   = sum_o w_o * (c(ctx_o, token) + 1) / (c(ctx_o) + |V|)
//   p_copy = (#token in source + alpha) / (|source| + alpha * |V|)
//
// where ctx_o is the last o - 1 tokens of the history, left-padded with the
// begin marker. Tokens outside the vocabulary (in history, source or as the
// predicted token) are mapped to the unknown token, which keeps every
// per-context distribution normalized over the vocabulary.
class CondLmModel {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kFormatVersion = "condlm/1";
  static constexpr TokenId kBosId = -1;

  struct CountEntry {
    int order = 1;
    TokenSequence context;  // order - 1 tokens, may include kBos
    std::string token;
    std::int64_t count = 0;

    friend bool operator==(const CountEntry&, const CountEntry&) = default;
  };

  // Vocabulary = every target token plus end and unknown markers. Counts
  // are collected with the end marker appended to every target.
  static CondLmModel train(const ParallelCorpus& corpus, const CondLmConfig& config = {});

  // A model with no counts: p_lm is uniform over the vocabulary.
  static CondLmModel untrained(const TokenSequence& words, const CondLmConfig& config = {});

  // Rebuilds a model from persisted parts; validates everything.
  static CondLmModel from_parts(const CondLmConfig& config, const TokenSequence& vocab,
                                const std::vector<CountEntry>& entries);

  int order() const { return config_.order; }
  double copy_weight() const { return config_.copy_weight; }
  double copy_alpha() const { return config_.copy_alpha; }
  const std::vector<double>& interp_weights() const { return config_.interp_weights; }
  const TokenizerConfig& tokenizer() const { return config_.tokenizer; }
  const CondLmConfig& config() const { return config_; }

  // Sorted vocabulary; a token's id is its index.
  const TokenSequence& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  TokenId id_of(std::string_view token) const;
  TokenId eos_id() const { return eos_id_; }
  TokenId unk_id() const { return unk_id_; }

  std::int64_t count(int order, const TokenSequence& context, std::string_view token) const;
  std::int64_t context_total(int order, const TokenSequence& context) const;

  // All nonzero counts, sorted by (order, context, token).
  std::vector<CountEntry> count_entries() const;

  // Copy of this model with one (context, token) count raised by `delta`.
  CondLmModel incremented(int order, const TokenSequence& context, std::string_view token,
                          std::int64_t delta = 1) const;

  // Per-source copy statistics, built once and reused across a decode.
  class SourceContext {
   public:
    SourceContext(const CondLmModel& model, const TokenSequence& source);
    double copy_probability(TokenId token) const;

   private:
    std::vector<std::int64_t> counts_;
    double denominator_ = 1.0;
    double alpha_ = 0.0;
  };

  // log p(token | history, source) over vocabulary ids.
  double logprob(const SourceContext& source, std::span<const TokenId> history,
                 TokenId token) const;

  friend bool operator==(const CondLmModel& a, const CondLmModel& b);

 private:
  struct ContextStats {
    std::int64_t total = 0;
    std::unordered_map<TokenId, std::int64_t> next;

    friend bool operator==(const ContextStats&, const ContextStats&) = default;
  };
  struct ContextHash {
    std::size_t operator()(const std::vector<TokenId>& key) const noexcept;
  };
  using ContextTable = std::unordered_map<std::vector<TokenId>, ContextStats, ContextHash>;

  CondLmModel(CondLmConfig config, TokenSequence vocab);
  void add_count(int order, const std::vector<TokenId>& context, TokenId token, std::int64_t delta);
  std::vector<TokenId> context_ids(const TokenSequence& context) const;
  const ContextStats* find(int order, const std::vector<TokenId>& context) const;

  CondLmConfig config_;
  TokenSequence vocab_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_id_ = 0;
  TokenId unk_id_ = 0;
  std::vector<ContextTable> tables_;  // tables_[o - 1] holds order-o contexts
};

// log p(token | history, source); unknown tokens map to the unknown marker.
double next_token_logprob(const CondLmModel& model, const TokenSequence& source,
                          const TokenSequence& history, std::string_view token);

// Average log-probability of the candidate followed by the end marker:
// (1 / (|candidate| + 1)) * sum of next_token_logprob over candidate + </s>.
double condlm_score(const CondLmModel& model, const TokenSequence& source,
                    const TokenSequence& candidate);

// Id-level variant used by decoders; identical arithmetic.
double condlm_score_ids(const CondLmModel& model, const CondLmModel::SourceContext& source,
                        std::span<const TokenId> candidate);

// Reference-free scorer backed by a model.
ScorerHandle make_condlm_scorer(std::shared_ptr<const CondLmModel> model,
                                std::string name = "condlm");

}  // namespace mg
