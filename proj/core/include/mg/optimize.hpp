#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mg/condlm.hpp"
#include "mg/scorer.hpp"
#include "mg/text.hpp"
#include "mg/types.hpp"

namespace mg {

struct DecodeConfig {
  int beam_width = 8;
  int max_len = 24;

  void validate() const;
};

enum class Procedure { direct, greedy_extract, rerank };

std::string_view to_string(Procedure procedure);
// Accepts "direct", "greedy", "greedy_extract" and "rerank".
Procedure parse_procedure(std::string_view text);

struct Candidate {
  std::string text;
  double base_score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// An n-best list for one segment, in base-model preference order.
struct CandidateSet {
  std::string segment_id;
  std::string system_name;
  std::vector<Candidate> candidates;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct OptimizerOutput {
  std::string segment_id;
  std::string text;
  std::string scorer_name;
  double score = 0.0;
  Procedure procedure = Procedure::direct;
  // Rerank: base-model score of the chosen candidate.
  std::optional<double> base_score;
  // Extraction: chosen sentence indices in document order.
  std::vector<std::size_t> selected;
};

// ---------------------------------------------------------------------------
// Direct optimization: beam search under the scorer's own model.

struct Hypothesis {
  std::vector<TokenId> ids;
  TokenSequence tokens;
  double log_prob = 0.0;  // summed, including the end marker
  double score = 0.0;     // condlm_score of tokens
  int completed_step = 0; // step at which the end marker was emitted (= length + 1)
};

// Partial hypotheses kept after each expansion step, for inspection.
struct BeamTrace {
  std::vector<std::vector<std::vector<TokenId>>> kept;
};

// Beam search over the vocabulary minus the end and unknown markers. At each
// step every kept partial is extended by every token; end-marker extensions
// enter the completed pool, and the beam_width best remaining extensions by
// summed log-probability survive (ties: lexicographic token order). Partials
// alive at max_len are completed with the end marker. The pool is returned
// best first by condlm_score, then earlier completion, then token order.
std::vector<Hypothesis> beam_search(const CondLmModel& model, const TokenSequence& source,
                                    const DecodeConfig& config, BeamTrace* trace = nullptr);

OptimizerOutput direct_decode(const CondLmModel& model, const TokenSequence& source,
                              const DecodeConfig& config, std::string_view scorer_name = "condlm");

// Top `size` pooled hypotheses as a candidate set; base_score is the raw
// summed log-probability (not length normalized).
CandidateSet nbest(const CondLmModel& model, const TokenSequence& source,
                   const DecodeConfig& config, std::size_t size, std::string segment_id = {},
                   std::string system_name = "base");

// ---------------------------------------------------------------------------
// Extractive optimization over document sentences.

struct ExtractOptions {
  int summary_k = 3;
  // Stop once the best marginal gain is <= 0 (at least one sentence kept).
  bool early_stop = false;
  // Upper bound on C(n, k) for exhaustive_extract.
  std::size_t exhaustive_cap = 10000;
  TokenizerConfig tokenizer;
};

struct GreedyRound {
  int round = 0;
  double score_before = 0.0;
  std::size_t chosen = 0;
  // (sentence index, summary score with that sentence added)
  std::vector<std::pair<std::size_t, double>> scores;
};

// Repeatedly adds the unselected sentence that maximizes the scorer value
// of the summary (selected sentences in document order); ties go to the
// lowest index. Runs min(summary_k, #sentences) rounds unless early_stop.
OptimizerOutput greedy_extract(const Scorer& scorer, const TokenSequence& source,
                               const std::vector<std::string>& sentences,
                               const ExtractOptions& options,
                               std::vector<GreedyRound>* trace = nullptr,
                               std::string_view segment_id = {});

// Exact argmax over all size-min(k, n) subsets; ties go to the
// lexicographically smallest index set. Throws when C(n, k) exceeds the cap.
OptimizerOutput exhaustive_extract(const Scorer& scorer, const TokenSequence& source,
                                   const std::vector<std::string>& sentences,
                                   const ExtractOptions& options,
                                   std::string_view segment_id = {});

// ---------------------------------------------------------------------------
// Reranking of an n-best list.

// Candidate with the highest scorer value; ties go to the higher base score,
// then the earlier list position.
OptimizerOutput rerank(const Scorer& scorer, const TokenSequence& source,
                       const CandidateSet& candidates, const TokenizerConfig& tokenizer = {});

// ---------------------------------------------------------------------------
// Batch driver.

struct OptimizeRequest {
  Procedure procedure = Procedure::direct;
  // Scorer for greedy_extract and rerank; optional for direct (names output).
  ScorerHandle scorer;
  // Model for direct.
  std::shared_ptr<const CondLmModel> model;
  DecodeConfig decode;
  ExtractOptions extract;
  // Candidate sets by segment id, for rerank.
  const std::map<std::string, CandidateSet>* candidates = nullptr;
  TokenizerConfig tokenizer;
  int jobs = 1;
};

struct SegmentOutcome {
  std::string segment_id;
  std::optional<OptimizerOutput> output;
  std::string error;  // set when output is empty
};

// One outcome per segment in input order. Per-segment failures are recorded
// in the outcome; missing procedure inputs for the whole batch throw.
std::vector<SegmentOutcome> optimize_dataset(const std::vector<Segment>& segments,
                                             const OptimizeRequest& request);

}  // namespace mg
