#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mg/optimize.hpp"
#include "mg/scorer.hpp"
#include "mg/types.hpp"

namespace mg {

inline constexpr std::string_view kReferenceSystem = "REFERENCE";

// system name -> segment id -> output text
using OutputsBySystem = std::map<std::string, std::map<std::string, std::string>>;

// Rejects duplicate (segment id, system) pairs.
OutputsBySystem group_outputs(const std::vector<SystemOutput>& outputs);

struct ScoreOptions {
  TokenizerConfig tokenizer;
  int jobs = 1;
};

struct SystemRow {
  std::string system;
  double corpus_score = 0.0;
  std::size_t n_segments = 0;

  friend bool operator==(const SystemRow&, const SystemRow&) = default;
};

// Corpus-level scores, one row per system. Rows are ordered by system name
// with the REFERENCE row, when present, last.
struct SystemScoreTable {
  std::string metric_name;
  std::vector<SystemRow> rows;

  const SystemRow* find(std::string_view system) const;
  std::vector<std::string> systems() const;

  friend bool operator==(const SystemScoreTable&, const SystemScoreTable&) = default;
};

// Segment-level scores aligned with the dataset's segment order.
struct SegmentScores {
  std::string metric_name;
  std::vector<std::string> segment_ids;
  std::map<std::string, std::vector<double>> by_system;
};

// Scores every (system, segment) pair. Every system must cover every
// segment. With include_reference_row the human references are scored as an
// extra "REFERENCE" system, which only makes sense for reference-free scorers.
SegmentScores segment_scores(const Scorer& scorer, const std::vector<Segment>& segments,
                             const OutputsBySystem& outputs, bool include_reference_row,
                             const ScoreOptions& options = {});

// Unweighted mean of segment scores per system.
SystemScoreTable aggregate(const SegmentScores& scores);

SystemScoreTable system_scores(const Scorer& scorer, const std::vector<Segment>& segments,
                               const OutputsBySystem& outputs, bool include_reference_row,
                               const ScoreOptions& options = {});

// Sample Pearson correlation. Throws ValidationError on length mismatch,
// fewer than two points or a constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct CorrelationReport {
  std::string metric_a;
  std::string metric_b;
  double pearson_r = 0.0;
  std::size_t n = 0;
  std::vector<std::string> systems;
};

// Pairs rows by system name; both tables must list the same systems.
CorrelationReport correlate(const SystemScoreTable& a, const SystemScoreTable& b);

struct PseudoReferenceResult {
  SystemScoreTable ref_based;  // systems scored against pseudo-references
  SystemScoreTable ref_free;   // systems scored by the reference-free scorer
  CorrelationReport correlation;
  std::vector<SegmentOutcome> pseudo_references;
};

// Builds one pseudo-reference per segment with the optimizer described by
// `optimize` (its scorer defaults to ref_free), scores every system against
// the pseudo-references with ref_based, scores every system with ref_free
// and correlates the two system-level vectors.
PseudoReferenceResult pseudo_reference_eval(const ScorerHandle& ref_free,
                                            const ScorerHandle& ref_based,
                                            const std::vector<Segment>& segments,
                                            const OutputsBySystem& outputs,
                                            OptimizeRequest optimize,
                                            const ScoreOptions& options = {});

struct BiasReport {
  SystemScoreTable table;  // sorted by corpus_score, best first; includes REFERENCE
  std::size_t reference_rank = 0;  // 1-based
  std::vector<std::string> above_reference;
};

BiasReport bias_report(const Scorer& ref_free, const std::vector<Segment>& segments,
                       const OutputsBySystem& outputs, const ScoreOptions& options = {});

// 1-based ranks, highest score first; equal scores are ordered by name.
std::map<std::string, int> rank_systems(const SystemScoreTable& table);

struct TwoAxisRow {
  std::string system;
  double score_a = 0.0;
  int rank_a = 0;
  double score_b = 0.0;
  int rank_b = 0;
};

// One row per system, in table a's row order.
std::vector<TwoAxisRow> two_axis_ranking(const SystemScoreTable& a, const SystemScoreTable& b);

}  // namespace mg
