#include "mg/condlm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "mg/error.hpp"

namespace mg {
namespace {

CondLmConfig validated(CondLmConfig config) {
  if (config.order < 1) throw ValidationError("condlm: order must be >= 1");
  if (!(config.copy_weight >= 0.0 && config.copy_weight < 1.0)) {
    throw ValidationError("condlm: copy_weight must lie in [0, 1)");
  }
  if (!(config.copy_alpha > 0.0) || !std::isfinite(config.copy_alpha)) {
    throw ValidationError("condlm: copy_alpha must be a positive finite number");
  }
  if (config.interp_weights.empty()) {
    config.interp_weights.assign(static_cast<std::size_t>(config.order),
                                 1.0 / static_cast<double>(config.order));
  }
  if (config.interp_weights.size() != static_cast<std::size_t>(config.order)) {
    throw ValidationError("condlm: expected " + std::to_string(config.order) +
                          " interpolation weights, got " +
                          std::to_string(config.interp_weights.size()));
  }
  double sum = 0.0;
  for (double w : config.interp_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("condlm: interpolation weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ValidationError("condlm: interpolation weights must sum to 1");
  }
  return config;
}

}  // namespace

std::size_t CondLmModel::ContextHash::operator()(const std::vector<TokenId>& key) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (TokenId id : key) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(id)) + 0x9e3779b97f4a7c15ULL +
         (h << 6) + (h >> 2);
  }
  return h;
}

CondLmModel::CondLmModel(CondLmConfig config, TokenSequence vocab)
    : config_(validated(std::move(config))), vocab_(std::move(vocab)) {
  if (!std::is_sorted(vocab_.begin(), vocab_.end()) ||
      std::adjacent_find(vocab_.begin(), vocab_.end()) != vocab_.end()) {
    throw ValidationError("condlm: vocabulary must be sorted and unique");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (vocab_[i] == kBos) throw ValidationError("condlm: vocabulary may not contain <s>");
    if (vocab_[i].empty()) throw ValidationError("condlm: vocabulary contains an empty token");
    index_.emplace(vocab_[i], static_cast<TokenId>(i));
  }
  const auto eos = index_.find(std::string(kEos));
  const auto unk = index_.find(std::string(kUnk));
  if (eos == index_.end() || unk == index_.end()) {
    throw ValidationError("condlm: vocabulary must contain </s> and <unk>");
  }
  eos_id_ = eos->second;
  unk_id_ = unk->second;
  tables_.resize(static_cast<std::size_t>(config_.order));
}

CondLmModel CondLmModel::untrained(const TokenSequence& words, const CondLmConfig& config) {
  std::set<std::string> vocab(words.begin(), words.end());
  vocab.emplace(kEos);
  vocab.emplace(kUnk);
  return CondLmModel(config, TokenSequence(vocab.begin(), vocab.end()));
}

CondLmModel CondLmModel::train(const ParallelCorpus& corpus, const CondLmConfig& config) {
  if (corpus.empty()) throw ValidationError("condlm: cannot train on an empty corpus");
  TokenSequence words;
  for (const auto& [source, target] : corpus) words.insert(words.end(), target.begin(), target.end());
  CondLmModel model = untrained(words, config);

  const int order = model.order();
  std::vector<TokenId> seq;
  std::vector<TokenId> context;
  for (const auto& [source, target] : corpus) {
    seq.clear();
    for (const auto& token : target) seq.push_back(model.id_of(token));
    seq.push_back(model.eos_id_);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (int o = 1; o <= order; ++o) {
        context.clear();
        for (int j = o - 1; j >= 1; --j) {
          const auto pos = static_cast<std::ptrdiff_t>(i) - j;
          context.push_back(pos < 0 ? kBosId : seq[static_cast<std::size_t>(pos)]);
        }
        model.add_count(o, context, seq[i], 1);
      }
    }
  }
  return model;
}

CondLmModel CondLmModel::from_parts(const CondLmConfig& config, const TokenSequence& vocab,
                                    const std::vector<CountEntry>& entries) {
  CondLmModel model(config, vocab);
  for (const auto& entry : entries) {
    if (entry.order < 1 || entry.order > model.order()) {
      throw ValidationError("condlm: count entry has order " + std::to_string(entry.order) +
                            " outside 1.." + std::to_string(model.order()));
    }
    if (entry.count <= 0) throw ValidationError("condlm: count entries must be positive");
    const auto token = model.index_.find(entry.token);
    if (token == model.index_.end()) {
      throw ValidationError("condlm: count entry token '" + entry.token + "' not in vocabulary");
    }
    for (const auto& c : entry.context) {
      if (c != kBos && !model.index_.contains(c)) {
        throw ValidationError("condlm: count entry context token '" + c + "' not in vocabulary");
      }
    }
    model.add_count(entry.order, model.context_ids(entry.context), token->second, entry.count);
    if (model.find(entry.order, model.context_ids(entry.context))->next.at(token->second) !=
        entry.count) {
      throw ValidationError("condlm: duplicate count entry for token '" + entry.token + "'");
    }
  }
  return model;
}

TokenId CondLmModel::id_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_id_ : it->second;
}

std::vector<TokenId> CondLmModel::context_ids(const TokenSequence& context) const {
  std::vector<TokenId> ids;
  ids.reserve(context.size());
  for (const auto& token : context) ids.push_back(token == kBos ? kBosId : id_of(token));
  return ids;
}

void CondLmModel::add_count(int order, const std::vector<TokenId>& context, TokenId token,
                            std::int64_t delta) {
  if (context.size() != static_cast<std::size_t>(order - 1)) {
    throw ValidationError("condlm: order-" + std::to_string(order) + " context needs " +
                          std::to_string(order - 1) + " tokens");
  }
  auto& stats = tables_[static_cast<std::size_t>(order - 1)][context];
  stats.total += delta;
  stats.next[token] += delta;
}

const CondLmModel::ContextStats* CondLmModel::find(int order,
                                                   const std::vector<TokenId>& context) const {
  const auto& table = tables_[static_cast<std::size_t>(order - 1)];
  const auto it = table.find(context);
  return it == table.end() ? nullptr : &it->second;
}

std::int64_t CondLmModel::count(int order, const TokenSequence& context,
                                std::string_view token) const {
  if (order < 1 || order > this->order()) throw ValidationError("condlm: order out of range");
  if (context.size() != static_cast<std::size_t>(order - 1)) {
    throw ValidationError("condlm: context length does not match order");
  }
  const auto* stats = find(order, context_ids(context));
  if (stats == nullptr) return 0;
  const auto it = stats->next.find(id_of(token));
  return it == stats->next.end() ? 0 : it->second;
}

std::int64_t CondLmModel::context_total(int order, const TokenSequence& context) const {
  if (order < 1 || order > this->order()) throw ValidationError("condlm: order out of range");
  if (context.size() != static_cast<std::size_t>(order - 1)) {
    throw ValidationError("condlm: context length does not match order");
  }
  const auto* stats = find(order, context_ids(context));
  return stats == nullptr ? 0 : stats->total;
}

std::vector<CondLmModel::CountEntry> CondLmModel::count_entries() const {
  std::vector<CountEntry> entries;
  for (int o = 1; o <= order(); ++o) {
    for (const auto& [context, stats] : tables_[static_cast<std::size_t>(o - 1)]) {
      TokenSequence words;
      for (TokenId id : context) {
        words.push_back(id == kBosId ? std::string(kBos) : vocab_[static_cast<std::size_t>(id)]);
      }
      for (const auto& [token, count] : stats.next) {
        if (count == 0) continue;
        entries.push_back({o, words, vocab_[static_cast<std::size_t>(token)], count});
      }
    }
  }
  std::sort(entries.begin(), entries.end(), [](const CountEntry& a, const CountEntry& b) {
    return std::tie(a.order, a.context, a.token) < std::tie(b.order, b.context, b.token);
  });
  return entries;
}

CondLmModel CondLmModel::incremented(int order, const TokenSequence& context,
                                     std::string_view token, std::int64_t delta) const {
  if (order < 1 || order > this->order()) throw ValidationError("condlm: order out of range");
  CondLmModel copy = *this;
  copy.add_count(order, copy.context_ids(context), copy.id_of(token), delta);
  return copy;
}

CondLmModel::SourceContext::SourceContext(const CondLmModel& model, const TokenSequence& source)
    : counts_(model.vocab_size(), 0), alpha_(model.copy_alpha()) {
  for (const auto& token : source) ++counts_[static_cast<std::size_t>(model.id_of(token))];
  denominator_ =
      static_cast<double>(source.size()) + alpha_ * static_cast<double>(model.vocab_size());
}

double CondLmModel::SourceContext::copy_probability(TokenId token) const {
  return (static_cast<double>(counts_[static_cast<std::size_t>(token)]) + alpha_) / denominator_;
}

double CondLmModel::logprob(const SourceContext& source, std::span<const TokenId> history,
                            TokenId token) const {
  const auto vocab_size = static_cast<double>(vocab_.size());
  const auto length = static_cast<std::ptrdiff_t>(history.size());
  std::vector<TokenId> context;
  double lm = 0.0;
  for (int o = 1; o <= order(); ++o) {
    context.clear();
    for (int j = o - 1; j >= 1; --j) {
      const auto pos = length - j;
      context.push_back(pos < 0 ? kBosId : history[static_cast<std::size_t>(pos)]);
    }
    std::int64_t hits = 0;
    std::int64_t total = 0;
    if (const auto* stats = find(o, context)) {
      total = stats->total;
      if (const auto it = stats->next.find(token); it != stats->next.end()) hits = it->second;
    }
    lm += config_.interp_weights[static_cast<std::size_t>(o - 1)] *
          (static_cast<double>(hits) + 1.0) / (static_cast<double>(total) + vocab_size);
  }
  const double lambda = config_.copy_weight;
  return std::log((1.0 - lambda) * lm + lambda * source.copy_probability(token));
}

bool operator==(const CondLmModel& a, const CondLmModel& b) {
  return a.config_.order == b.config_.order && a.config_.copy_weight == b.config_.copy_weight &&
         a.config_.copy_alpha == b.config_.copy_alpha &&
         a.config_.interp_weights == b.config_.interp_weights &&
         a.config_.tokenizer == b.config_.tokenizer && a.vocab_ == b.vocab_ &&
         a.tables_ == b.tables_;
}

double next_token_logprob(const CondLmModel& model, const TokenSequence& source,
                          const TokenSequence& history, std::string_view token) {
  const CondLmModel::SourceContext context(model, source);
  std::vector<TokenId> ids;
  ids.reserve(history.size());
  for (const auto& t : history) ids.push_back(model.id_of(t));
  return model.logprob(context, ids, model.id_of(token));
}

double condlm_score_ids(const CondLmModel& model, const CondLmModel::SourceContext& source,
                        std::span<const TokenId> candidate) {
  double sum = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    sum += model.logprob(source, candidate.first(i), candidate[i]);
  }
  sum += model.logprob(source, candidate, model.eos_id());
  return sum / static_cast<double>(candidate.size() + 1);
}

double condlm_score(const CondLmModel& model, const TokenSequence& source,
                    const TokenSequence& candidate) {
  const CondLmModel::SourceContext context(model, source);
  std::vector<TokenId> ids;
  ids.reserve(candidate.size());
  for (const auto& t : candidate) ids.push_back(model.id_of(t));
  return condlm_score_ids(model, context, ids);
}

namespace {

class CondLmScorer final : public Scorer {
 public:
  CondLmScorer(std::shared_ptr<const CondLmModel> model, std::string name)
      : model_(std::move(model)) {
    if (!model_) throw ValidationError("condlm scorer needs a model");
    info_.name = std::move(name);
    info_.kind = ScorerKind::reference_free;
    info_.backend = ScorerBackend::native_condlm;
    info_.deterministic = true;
  }

  const ScorerInfo& info() const override { return info_; }

  double evaluate(const TokenSequence& source, const TokenSequence& candidate,
                  const TokenSequence*, std::string_view) const override {
    return condlm_score(*model_, source, candidate);
  }

 private:
  ScorerInfo info_;
  std::shared_ptr<const CondLmModel> model_;
};

}  // namespace

ScorerHandle make_condlm_scorer(std::shared_ptr<const CondLmModel> model, std::string name) {
  return std::make_shared<CondLmScorer>(std::move(model), std::move(name));
}

}  // namespace mg
