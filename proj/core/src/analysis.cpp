#include "mg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mg/error.hpp"
#include "parallel.hpp"

namespace mg {

OutputsBySystem group_outputs(const std::vector<SystemOutput>& outputs) {
  OutputsBySystem grouped;
  for (const auto& out : outputs) {
    auto [it, inserted] = grouped[out.system_name].emplace(out.segment_id, out.output);
    if (!inserted) {
      throw ValidationError("duplicate output for segment " + out.segment_id + ", system " +
                            out.system_name);
    }
  }
  return grouped;
}

const SystemRow* SystemScoreTable::find(std::string_view system) const {
  for (const auto& row : rows) {
    if (row.system == system) return &row;
  }
  return nullptr;
}

std::vector<std::string> SystemScoreTable::systems() const {
  std::vector<std::string> names;
  for (const auto& row : rows) names.push_back(row.system);
  return names;
}

SegmentScores segment_scores(const Scorer& scorer, const std::vector<Segment>& segments,
                             const OutputsBySystem& outputs, bool include_reference_row,
                             const ScoreOptions& options) {
  if (include_reference_row && scorer.info().kind == ScorerKind::reference_based) {
    throw ValidationError("a REFERENCE row cannot be scored with reference-based scorer '" +
                          scorer.info().name + "'");
  }
  if (outputs.contains(std::string(kReferenceSystem))) {
    throw ValidationError("system name REFERENCE is reserved");
  }

  std::set<std::string> known;
  for (const auto& seg : segments) known.insert(seg.id);
  for (const auto& [system, by_segment] : outputs) {
    for (const auto& seg : segments) {
      if (!by_segment.contains(seg.id)) {
        throw ValidationError("system " + system + " has no output for segment " + seg.id);
      }
    }
    for (const auto& [id, text] : by_segment) {
      if (!known.contains(id)) {
        throw ValidationError("system " + system + " has an output for unknown segment " + id);
      }
    }
  }

  std::vector<TokenSequence> sources;
  std::vector<std::optional<TokenSequence>> references;
  for (const auto& seg : segments) {
    sources.push_back(tokenize(seg.source, options.tokenizer));
    if (seg.reference) {
      references.emplace_back(tokenize(*seg.reference, options.tokenizer));
    } else {
      references.emplace_back();
    }
  }

  SegmentScores result;
  result.metric_name = scorer.info().name;
  for (const auto& seg : segments) result.segment_ids.push_back(seg.id);

  // Flattened (system, segment) tasks; each writes its own slot.
  struct Task {
    std::vector<double>* slot;
    std::size_t segment;
    const std::string* text;
  };
  std::vector<Task> tasks;
  for (const auto& [system, by_segment] : outputs) {
    auto& slot = result.by_system[system];
    slot.assign(segments.size(), 0.0);
  }
  for (const auto& [system, by_segment] : outputs) {
    auto& slot = result.by_system[system];
    for (std::size_t i = 0; i < segments.size(); ++i) {
      tasks.push_back({&slot, i, &by_segment.at(segments[i].id)});
    }
  }
  if (include_reference_row) {
    auto& slot = result.by_system[std::string(kReferenceSystem)];
    slot.assign(segments.size(), 0.0);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (!segments[i].reference) {
        throw ValidationError("segment " + segments[i].id + " has no reference for the REFERENCE row");
      }
      tasks.push_back({&slot, i, &*segments[i].reference});
    }
  }

  detail::parallel_for(tasks.size(), options.jobs, [&](std::size_t t) {
    const auto& task = tasks[t];
    (*task.slot)[task.segment] =
        score(scorer, sources[task.segment], tokenize(*task.text, options.tokenizer),
              references[task.segment], segments[task.segment].id);
  });
  return result;
}

SystemScoreTable aggregate(const SegmentScores& scores) {
  SystemScoreTable table;
  table.metric_name = scores.metric_name;
  const std::vector<double>* reference = nullptr;
  auto mean_row = [&](const std::string& system, const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("cannot aggregate zero segments");
    double sum = 0.0;
    for (double v : values) sum += v;
    return SystemRow{system, sum / static_cast<double>(values.size()), values.size()};
  };
  for (const auto& [system, values] : scores.by_system) {
    if (system == kReferenceSystem) {
      reference = &values;
      continue;
    }
    table.rows.push_back(mean_row(system, values));
  }
  if (reference != nullptr) table.rows.push_back(mean_row(std::string(kReferenceSystem), *reference));
  return table;
}

SystemScoreTable system_scores(const Scorer& scorer, const std::vector<Segment>& segments,
                               const OutputsBySystem& outputs, bool include_reference_row,
                               const ScoreOptions& options) {
  return aggregate(segment_scores(scorer, segments, outputs, include_reference_row, options));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("pearson: inputs have different lengths (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ValidationError("pearson: need at least two points");
  const auto n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson: constant input has zero variance; correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlate(const SystemScoreTable& a, const SystemScoreTable& b) {
  auto names_a = a.systems();
  auto names_b = b.systems();
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) {
    throw ValidationError("cannot correlate tables with different system sets (" + a.metric_name +
                          " vs " + b.metric_name + ")");
  }
  for (const auto* table : {&a, &b}) {
    for (const auto& row : table->rows) {
      if (row.n_segments != table->rows.front().n_segments) {
        throw ValidationError("table " + table->metric_name +
                              " mixes systems scored on different segment counts");
      }
    }
  }
  CorrelationReport report;
  report.metric_a = a.metric_name;
  report.metric_b = b.metric_name;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : a.rows) {
    report.systems.push_back(row.system);
    xs.push_back(row.corpus_score);
    ys.push_back(b.find(row.system)->corpus_score);
  }
  report.n = xs.size();
  report.pearson_r = pearson(xs, ys);
  return report;
}

PseudoReferenceResult pseudo_reference_eval(const ScorerHandle& ref_free,
                                            const ScorerHandle& ref_based,
                                            const std::vector<Segment>& segments,
                                            const OutputsBySystem& outputs,
                                            OptimizeRequest optimize,
                                            const ScoreOptions& options) {
  if (!ref_free || ref_free->info().kind != ScorerKind::reference_free) {
    throw ValidationError("pseudo-reference evaluation needs a reference-free scorer");
  }
  if (!ref_based || ref_based->info().kind != ScorerKind::reference_based) {
    throw ValidationError("pseudo-reference evaluation needs a reference-based metric");
  }
  if (outputs.size() < 2) {
    throw ValidationError("pseudo-reference evaluation needs at least 2 systems, got " +
                          std::to_string(outputs.size()));
  }
  if (!optimize.scorer) optimize.scorer = ref_free;
  optimize.jobs = options.jobs;

  PseudoReferenceResult result;
  result.pseudo_references = optimize_dataset(segments, optimize);

  std::vector<Segment> pseudo = segments;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& outcome = result.pseudo_references[i];
    if (!outcome.output) {
      throw Error("could not build a pseudo-reference for segment " + outcome.segment_id + ": " +
                  outcome.error);
    }
    pseudo[i].reference = outcome.output->text;
  }
  result.ref_based = system_scores(*ref_based, pseudo, outputs, false, options);
  result.ref_free = system_scores(*ref_free, segments, outputs, false, options);
  result.correlation = correlate(result.ref_free, result.ref_based);
  return result;
}

namespace {

std::vector<SystemRow> sorted_rows(const SystemScoreTable& table) {
  auto rows = table.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SystemRow& a, const SystemRow& b) {
    if (a.corpus_score != b.corpus_score) return a.corpus_score > b.corpus_score;
    return a.system < b.system;
  });
  return rows;
}

}  // namespace

BiasReport bias_report(const Scorer& ref_free, const std::vector<Segment>& segments,
                       const OutputsBySystem& outputs, const ScoreOptions& options) {
  if (ref_free.info().kind != ScorerKind::reference_free) {
    throw ValidationError("bias report needs a reference-free scorer, got '" +
                          ref_free.info().name + "'");
  }
  for (const auto& seg : segments) {
    if (!seg.reference) throw ValidationError("segment " + seg.id + " has no reference");
  }
  BiasReport report;
  report.table = system_scores(ref_free, segments, outputs, true, options);
  report.table.rows = sorted_rows(report.table);
  for (std::size_t i = 0; i < report.table.rows.size(); ++i) {
    if (report.table.rows[i].system == kReferenceSystem) {
      report.reference_rank = i + 1;
      break;
    }
    report.above_reference.push_back(report.table.rows[i].system);
  }
  return report;
}

std::map<std::string, int> rank_systems(const SystemScoreTable& table) {
  std::map<std::string, int> ranks;
  int rank = 0;
  for (const auto& row : sorted_rows(table)) ranks[row.system] = ++rank;
  return ranks;
}

std::vector<TwoAxisRow> two_axis_ranking(const SystemScoreTable& a, const SystemScoreTable& b) {
  auto names_a = a.systems();
  auto names_b = b.systems();
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) throw ValidationError("two-axis ranking needs identical system sets");
  const auto ranks_a = rank_systems(a);
  const auto ranks_b = rank_systems(b);
  std::vector<TwoAxisRow> rows;
  for (const auto& row : a.rows) {
    rows.push_back({row.system, row.corpus_score, ranks_a.at(row.system),
                    b.find(row.system)->corpus_score, ranks_b.at(row.system)});
  }
  return rows;
}

}  // namespace mg
