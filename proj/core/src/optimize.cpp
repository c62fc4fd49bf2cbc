#include "mg/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "mg/error.hpp"
#include "parallel.hpp"

namespace mg {

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ValidationError("beam_width must be >= 1");
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
}

std::string_view to_string(Procedure procedure) {
  switch (procedure) {
    case Procedure::direct:
      return "direct";
    case Procedure::greedy_extract:
      return "greedy_extract";
    case Procedure::rerank:
      return "rerank";
  }
  return "unknown";
}

Procedure parse_procedure(std::string_view text) {
  if (text == "direct") return Procedure::direct;
  if (text == "greedy" || text == "greedy_extract") return Procedure::greedy_extract;
  if (text == "rerank") return Procedure::rerank;
  throw ValidationError("unknown procedure '" + std::string(text) +
                        "' (expected direct, greedy or rerank)");
}

// ---------------------------------------------------------------------------

namespace {

struct Partial {
  std::vector<TokenId> ids;
  double log_prob = 0.0;
};

}  // namespace

std::vector<Hypothesis> beam_search(const CondLmModel& model, const TokenSequence& source,
                                    const DecodeConfig& config, BeamTrace* trace) {
  config.validate();
  const CondLmModel::SourceContext context(model, source);
  const auto vocab_size = static_cast<TokenId>(model.vocab_size());

  std::vector<Hypothesis> pool;
  auto complete = [&](const Partial& partial, double log_prob) {
    Hypothesis h;
    h.ids = partial.ids;
    for (TokenId id : h.ids) h.tokens.push_back(model.vocab()[static_cast<std::size_t>(id)]);
    h.log_prob = log_prob;
    h.score = condlm_score_ids(model, context, h.ids);
    h.completed_step = static_cast<int>(h.ids.size()) + 1;
    pool.push_back(std::move(h));
  };

  std::vector<Partial> beam{Partial{}};
  std::vector<Partial> expansions;
  for (int step = 1; step <= config.max_len && !beam.empty(); ++step) {
    expansions.clear();
    for (const auto& partial : beam) {
      for (TokenId token = 0; token < vocab_size; ++token) {
        if (token == model.unk_id()) continue;
        const double lp = partial.log_prob + model.logprob(context, partial.ids, token);
        if (token == model.eos_id()) {
          complete(partial, lp);
          continue;
        }
        Partial next{partial.ids, lp};
        next.ids.push_back(token);
        expansions.push_back(std::move(next));
      }
    }
    const auto keep = std::min(expansions.size(), static_cast<std::size_t>(config.beam_width));
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), [](const Partial& a, const Partial& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        return a.ids < b.ids;
                      });
    expansions.resize(keep);
    beam.swap(expansions);
    if (trace != nullptr) {
      auto& kept = trace->kept.emplace_back();
      for (const auto& partial : beam) kept.push_back(partial.ids);
    }
  }
  for (const auto& partial : beam) {
    complete(partial, partial.log_prob + model.logprob(context, partial.ids, model.eos_id()));
  }

  std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.completed_step != b.completed_step) return a.completed_step < b.completed_step;
    return a.ids < b.ids;
  });
  return pool;
}

OptimizerOutput direct_decode(const CondLmModel& model, const TokenSequence& source,
                              const DecodeConfig& config, std::string_view scorer_name) {
  auto pool = beam_search(model, source, config);
  // The empty hypothesis is always pooled at step 1, so the pool is never empty.
  const auto& best = pool.front();
  OptimizerOutput out;
  out.text = detokenize(best.tokens);
  out.scorer_name = std::string(scorer_name);
  out.score = best.score;
  out.procedure = Procedure::direct;
  return out;
}

CandidateSet nbest(const CondLmModel& model, const TokenSequence& source,
                   const DecodeConfig& config, std::size_t size, std::string segment_id,
                   std::string system_name) {
  if (size == 0) throw ValidationError("nbest: size must be >= 1");
  const auto pool = beam_search(model, source, config);
  CandidateSet set;
  set.segment_id = std::move(segment_id);
  set.system_name = std::move(system_name);
  for (std::size_t i = 0; i < std::min(size, pool.size()); ++i) {
    set.candidates.push_back({detokenize(pool[i].tokens), pool[i].log_prob});
  }
  return set;
}

// ---------------------------------------------------------------------------

namespace {

struct Document {
  std::vector<TokenSequence> sentences;

  TokenSequence summary(const std::vector<std::size_t>& indices) const {
    TokenSequence tokens;
    for (auto i : indices) tokens.insert(tokens.end(), sentences[i].begin(), sentences[i].end());
    return tokens;
  }
};

Document tokenize_document(const std::vector<std::string>& sentences,
                           const TokenizerConfig& tokenizer) {
  if (sentences.empty()) throw ValidationError("cannot extract from an empty document");
  Document doc;
  for (const auto& s : sentences) doc.sentences.push_back(tokenize(s, tokenizer));
  return doc;
}

void require_reference_free(const Scorer& scorer, std::string_view procedure) {
  if (scorer.info().kind != ScorerKind::reference_free) {
    throw ValidationError(std::string(procedure) + " requires a reference-free scorer, got '" +
                          scorer.info().name + "'");
  }
}

OptimizerOutput extraction_output(const Scorer& scorer, const std::vector<std::string>& sentences,
                                  std::vector<std::size_t> selected, double score,
                                  std::string_view segment_id) {
  std::sort(selected.begin(), selected.end());
  OptimizerOutput out;
  out.segment_id = std::string(segment_id);
  out.scorer_name = scorer.info().name;
  out.score = score;
  out.procedure = Procedure::greedy_extract;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (i > 0) out.text.push_back(' ');
    out.text += sentences[selected[i]];
  }
  out.selected = std::move(selected);
  return out;
}

}  // namespace

OptimizerOutput greedy_extract(const Scorer& scorer, const TokenSequence& source,
                               const std::vector<std::string>& sentences,
                               const ExtractOptions& options, std::vector<GreedyRound>* trace,
                               std::string_view segment_id) {
  require_reference_free(scorer, "greedy_extract");
  if (options.summary_k < 1) throw ValidationError("summary_k must be >= 1");
  const Document doc = tokenize_document(sentences, options.tokenizer);
  const std::size_t n = doc.sentences.size();
  const std::size_t rounds = std::min(static_cast<std::size_t>(options.summary_k), n);

  std::vector<std::size_t> selected;
  std::vector<bool> taken(n, false);
  double current = score(scorer, source, {}, std::nullopt, segment_id);
  for (std::size_t r = 0; r < rounds; ++r) {
    GreedyRound round;
    round.round = static_cast<int>(r);
    round.score_before = current;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_index = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      auto indices = selected;
      indices.insert(std::upper_bound(indices.begin(), indices.end(), i), i);
      const double value = score(scorer, source, doc.summary(indices), std::nullopt, segment_id);
      round.scores.emplace_back(i, value);
      if (best_index == n || value > best) {
        best = value;
        best_index = i;
      }
    }
    if (options.early_stop && !selected.empty() && best - current <= 0.0) break;
    round.chosen = best_index;
    if (trace != nullptr) trace->push_back(std::move(round));
    taken[best_index] = true;
    selected.insert(std::upper_bound(selected.begin(), selected.end(), best_index), best_index);
    current = best;
  }
  return extraction_output(scorer, sentences, std::move(selected), current, segment_id);
}

OptimizerOutput exhaustive_extract(const Scorer& scorer, const TokenSequence& source,
                                   const std::vector<std::string>& sentences,
                                   const ExtractOptions& options, std::string_view segment_id) {
  require_reference_free(scorer, "exhaustive_extract");
  if (options.summary_k < 1) throw ValidationError("summary_k must be >= 1");
  const Document doc = tokenize_document(sentences, options.tokenizer);
  const std::size_t n = doc.sentences.size();
  const std::size_t k = std::min(static_cast<std::size_t>(options.summary_k), n);

  // C(n, k) built as C(n - k + i, i), which grows with i, so stop at the cap.
  std::size_t subsets = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    subsets = subsets * (n - k + i) / i;
    if (subsets > options.exhaustive_cap) {
      throw ValidationError("exhaustive_extract: C(" + std::to_string(n) + ", " +
                            std::to_string(k) + ") exceeds the cap of " +
                            std::to_string(options.exhaustive_cap) + "; use greedy_extract");
    }
  }

  std::vector<std::size_t> indices(k);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::vector<std::size_t> best_indices;
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    const double value = score(scorer, source, doc.summary(indices), std::nullopt, segment_id);
    if (best_indices.empty() || value > best) {
      best = value;
      best_indices = indices;
    }
    // Next combination in lexicographic order.
    std::size_t pos = k;
    while (pos > 0 && indices[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++indices[pos - 1];
    for (std::size_t j = pos; j < k; ++j) indices[j] = indices[j - 1] + 1;
  }
  return extraction_output(scorer, sentences, std::move(best_indices), best, segment_id);
}

// ---------------------------------------------------------------------------

OptimizerOutput rerank(const Scorer& scorer, const TokenSequence& source,
                       const CandidateSet& candidates, const TokenizerConfig& tokenizer) {
  require_reference_free(scorer, "rerank");
  if (candidates.candidates.empty()) {
    throw ValidationError("rerank: empty candidate set for segment " + candidates.segment_id);
  }
  std::size_t best_index = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto& cand = candidates.candidates[i];
    if (!std::isfinite(cand.base_score)) {
      throw ValidationError("rerank: non-finite base_score in segment " + candidates.segment_id);
    }
    const double value =
        score(scorer, source, tokenize(cand.text, tokenizer), std::nullopt, candidates.segment_id);
    const bool better =
        i == 0 || value > best ||
        (value == best && cand.base_score > candidates.candidates[best_index].base_score);
    if (better) {
      best = value;
      best_index = i;
    }
  }
  OptimizerOutput out;
  out.segment_id = candidates.segment_id;
  out.text = candidates.candidates[best_index].text;
  out.scorer_name = scorer.info().name;
  out.score = best;
  out.procedure = Procedure::rerank;
  out.base_score = candidates.candidates[best_index].base_score;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SegmentOutcome> optimize_dataset(const std::vector<Segment>& segments,
                                             const OptimizeRequest& request) {
  switch (request.procedure) {
    case Procedure::direct:
      if (!request.model) throw ValidationError("direct optimization needs a condlm model");
      request.decode.validate();
      break;
    case Procedure::greedy_extract:
      if (!request.scorer) throw ValidationError("greedy_extract needs a scorer");
      break;
    case Procedure::rerank:
      if (!request.scorer) throw ValidationError("rerank needs a scorer");
      if (request.candidates == nullptr) throw ValidationError("rerank needs candidate sets");
      break;
  }

  std::vector<SegmentOutcome> outcomes(segments.size());
  detail::parallel_for(segments.size(), request.jobs, [&](std::size_t i) {
    const Segment& segment = segments[i];
    SegmentOutcome& outcome = outcomes[i];
    outcome.segment_id = segment.id;
    try {
      OptimizerOutput out;
      switch (request.procedure) {
        case Procedure::direct: {
          const auto name = request.scorer ? request.scorer->info().name : std::string("condlm");
          out = direct_decode(*request.model, tokenize(segment.source, request.model->tokenizer()),
                              request.decode, name);
          break;
        }
        case Procedure::greedy_extract:
          out = greedy_extract(*request.scorer, tokenize(segment.source, request.tokenizer),
                               segment.document_sentences(), request.extract, nullptr, segment.id);
          break;
        case Procedure::rerank: {
          const auto it = request.candidates->find(segment.id);
          if (it == request.candidates->end()) {
            throw ValidationError("missing candidate set for segment " + segment.id);
          }
          out = rerank(*request.scorer, tokenize(segment.source, request.tokenizer), it->second,
                       request.tokenizer);
          break;
        }
      }
      out.segment_id = segment.id;
      outcome.output = std::move(out);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });
  return outcomes;
}

}  // namespace mg
