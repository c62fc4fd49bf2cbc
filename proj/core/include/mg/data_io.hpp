#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mg/analysis.hpp"
#include "mg/condlm.hpp"
#include "mg/optimize.hpp"
#include "mg/types.hpp"

namespace mg {

// All readers report failures as ValidationError("<name>:<line>: ...").
// All writers emit UTF-8, one JSON object per '\n'-terminated line, with a
// fixed key order. Floating-point numbers carry 17 significant digits.

// Dataset JSONL: {"id", "source", "reference": str|null,
//                 "sentences": [str]|null, "domain_kind"}
std::vector<Segment> read_dataset(std::istream& in, std::string_view name = "<dataset>");
std::vector<Segment> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const std::vector<Segment>& segments);
void save_dataset(const std::filesystem::path& path, const std::vector<Segment>& segments);

// Outputs JSONL: {"id", "system", "output"}
std::vector<SystemOutput> read_outputs(std::istream& in, std::string_view name = "<outputs>");
std::vector<SystemOutput> load_outputs(const std::filesystem::path& path);
void write_outputs(std::ostream& out, const std::vector<SystemOutput>& outputs);
void save_outputs(const std::filesystem::path& path, const std::vector<SystemOutput>& outputs);

// Candidates JSONL: {"id", "system", "candidates": [{"text", "base_score"}]}
std::vector<CandidateSet> read_candidates(std::istream& in, std::string_view name = "<candidates>");
std::vector<CandidateSet> load_candidates(const std::filesystem::path& path);
void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets);
void save_candidates(const std::filesystem::path& path, const std::vector<CandidateSet>& sets);

// Versioned structured-text model file. load(save(m)) == m exactly.
CondLmModel read_model(std::istream& in, std::string_view name = "<model>");
CondLmModel load_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const CondLmModel& model);
void save_model(const std::filesystem::path& path, const CondLmModel& model);

// Greedy extraction trace, one JSON object per round.
void write_greedy_trace(std::ostream& out, std::string_view segment_id,
                        const std::vector<GreedyRound>& rounds);

// Shortest form is not used; always 17 significant digits.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Provenance attached to every file the tools write.

struct RunMetadata {
  std::string command;
  TokenizerConfig tokenizer;
  // Ordered key/value settings (scorer name, kind, flags, seeds, ...).
  std::vector<std::pair<std::string, std::string>> settings;

  std::string to_json() const;
};

// Writes `<path>.meta.json` next to a JSONL output.
void save_sidecar_metadata(const std::filesystem::path& path, const RunMetadata& meta);

// System-level CSV: a "# {metadata}" line, then "system,score,n_segments".
void write_system_table_csv(std::ostream& out, const SystemScoreTable& table,
                            const RunMetadata& meta);
SystemScoreTable read_system_table_csv(std::istream& in, std::string_view name = "<csv>");
SystemScoreTable load_system_table_csv(const std::filesystem::path& path);

// Segment-level CSV: "id,system,score".
void write_segment_scores_csv(std::ostream& out, const SegmentScores& scores,
                              const RunMetadata& meta);

// Two-axis CSV: "system,score_a,rank_a,score_b,rank_b".
void write_two_axis_csv(std::ostream& out, const std::vector<TwoAxisRow>& rows,
                        const RunMetadata& meta);

// ---------------------------------------------------------------------------
// Synthetic benchmark.

struct SyntheticBenchmark {
  std::vector<Segment> segments;
  std::vector<SystemOutput> outputs;
};

// The toy translation used for references: a fixed token substitution that
// rotates words within each content-word class and keeps function words and
// punctuation unchanged.
TokenSequence synthetic_cipher(const TokenSequence& source);

std::string synthetic_system_name(std::size_t index);

// Sources come from a small seeded grammar; references are their ciphers;
// system i corrupts each reference token with probability noise_levels[i]
// (half of corruptions drop the token, half substitute a random word).
SyntheticBenchmark generate_synthetic_benchmark(std::uint64_t seed, std::size_t n_segments,
                                                std::size_t n_systems,
                                                const std::vector<double>& noise_levels);

}  // namespace mg
