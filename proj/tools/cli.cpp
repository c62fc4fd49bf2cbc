#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include "mg/analysis.hpp"
#include "mg/bridge.hpp"
#include "mg/condlm.hpp"
#include "mg/data_io.hpp"
#include "mg/error.hpp"
#include "mg/optimize.hpp"

namespace mg::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct ResolvedScorer {
  ScorerHandle handle;
  std::shared_ptr<const CondLmModel> model;
  TokenizerConfig tokenizer;
};

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::shared_ptr<const CondLmModel> load_shared_model(const std::string& path) {
  return std::make_shared<const CondLmModel>(load_model(path));
}

// <name> | condlm (with --model) | condlm:<path> | <model path> | extern:<argv>
ResolvedScorer resolve_scorer(const std::string& spec, const std::string& model_path,
                              const TokenizerConfig& tokenizer) {
  ResolvedScorer resolved;
  resolved.tokenizer = tokenizer;
  auto use_model = [&](const std::string& path) {
    resolved.model = load_shared_model(path);
    resolved.tokenizer = resolved.model->tokenizer();
    resolved.handle = make_condlm_scorer(resolved.model);
  };
  if (spec.rfind("extern:", 0) == 0) {
    const auto argv = split_words(spec.substr(7));
    resolved.handle = spawn_scorer(argv, BridgeOptions::from_environment());
  } else if (spec == "condlm") {
    if (model_path.empty()) throw ValidationError("scorer 'condlm' needs --model <path>");
    use_model(model_path);
  } else if (spec.rfind("condlm:", 0) == 0) {
    use_model(spec.substr(7));
  } else if (const auto builtins = builtin_metric_names();
             std::find(builtins.begin(), builtins.end(), spec) != builtins.end()) {
    resolved.handle = make_builtin_metric(spec);
  } else if (fs::is_regular_file(spec)) {
    use_model(spec);
  } else {
    std::string names;
    for (const auto& n : builtin_metric_names()) names += " " + n;
    throw ValidationError("unknown scorer '" + spec + "' (built-ins:" + names +
                          "; or condlm, condlm:<model>, <model path>, extern:<command>)");
  }
  return resolved;
}

std::vector<std::pair<std::string, std::string>> scorer_settings(const Scorer& scorer) {
  const auto& info = scorer.info();
  return {{"scorer", info.name},
          {"scorer_kind", std::string(to_string(info.kind))},
          {"scorer_backend", std::string(to_string(info.backend))}};
}

std::string command_line(const std::vector<std::string>& args) {
  std::string line = "mg";
  for (std::size_t i = 1; i < args.size(); ++i) line += " " + args[i];
  return line;
}

OutputsBySystem load_all_outputs(const std::vector<std::string>& paths) {
  std::vector<SystemOutput> all;
  for (const auto& p : paths) {
    auto outputs = load_outputs(p);
    all.insert(all.end(), outputs.begin(), outputs.end());
  }
  return group_outputs(all);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// 17 significant digits, always with a decimal point.
std::string print_number(double value) {
  auto text = format_double(value);
  if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
  return text;
}

void print_table(std::ostream& out, const SystemScoreTable& table) {
  out << "metric: " << table.metric_name << '\n';
  for (const auto& row : table.rows) {
    out << "  " << std::left << std::setw(16) << row.system << ' ' << print_number(row.corpus_score)
        << '\n';
  }
}

// Writes successful outcomes and reports failures. Returns true if all succeeded.
bool write_outcomes(const std::vector<SegmentOutcome>& outcomes, const std::string& system,
                    const fs::path& path, const RunMetadata& meta, std::ostream& err) {
  std::vector<SystemOutput> outputs;
  bool ok = true;
  for (const auto& outcome : outcomes) {
    if (outcome.output) {
      outputs.push_back({outcome.segment_id, system, outcome.output->text});
    } else {
      ok = false;
      err << "segment " << outcome.segment_id << ": " << outcome.error << '\n';
    }
  }
  ensure_parent(path);
  save_outputs(path, outputs);
  save_sidecar_metadata(path, meta);
  return ok;
}

struct Common {
  std::string dataset;
  std::vector<std::string> outputs;
  std::string scorer;
  std::string model;
  std::string out;
  bool no_lowercase = false;
  int jobs = 1;

  TokenizerConfig tokenizer() const { return TokenizerConfig{!no_lowercase}; }
};

void add_jobs(CLI::App* cmd, Common& c) {
  cmd->add_option("--jobs", c.jobs, "Worker threads for segment-parallel stages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_tokenizer(CLI::App* cmd, Common& c) {
  cmd->add_flag("--no-lowercase", c.no_lowercase,
                "Keep case when tokenizing (ignored for condlm scorers, which use the model's setting)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mg: scoring, optimization and meta-evaluation of text generation metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MG_VERSION));

  const std::string cmdline = command_line(args);

  // gen-bench ---------------------------------------------------------------
  std::uint64_t seed = 7;
  std::size_t n_segments = 200;
  std::size_t n_systems = 6;
  std::vector<double> noise{0.0, 0.1, 0.2, 0.3, 0.5, 0.7};
  std::string out_dir;
  auto* gen = app.add_subcommand("gen-bench", "Generate the seeded synthetic benchmark");
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen->add_option("--segments", n_segments, "Number of segments")->capture_default_str();
  gen->add_option("--systems", n_systems, "Number of systems")->capture_default_str();
  gen->add_option("--noise", noise, "Per-system noise levels in [0,1]")
      ->delimiter(',')
      ->capture_default_str();
  gen->add_option("--out-dir", out_dir, "Directory for dataset.jsonl and outputs.jsonl")->required();

  // train-scorer ------------------------------------------------------------
  Common train_args;
  CondLmConfig lm_config;
  auto* train = app.add_subcommand("train-scorer", "Train a condlm model on source/reference pairs");
  train->add_option("--corpus", train_args.dataset, "Dataset JSONL with references")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--order", lm_config.order, "n-gram order")->capture_default_str();
  train->add_option("--copy-weight", lm_config.copy_weight, "Source copy mixture weight in [0,1)")
      ->capture_default_str();
  train->add_option("--alpha", lm_config.copy_alpha, "Copy distribution smoothing (> 0)")
      ->capture_default_str();
  train->add_option("--interp", lm_config.interp_weights,
                    "Per-order interpolation weights, unigram first (default: uniform)")
      ->delimiter(',');
  train->add_option("--out", train_args.out, "Model file to write")->required();
  add_tokenizer(train, train_args);

  // score -------------------------------------------------------------------
  Common score_args;
  bool per_segment = false;
  bool include_reference = false;
  auto* score_cmd = app.add_subcommand("score", "Score system outputs with one scorer");
  score_cmd->add_option("--scorer", score_args.scorer, "Scorer: metric name, condlm, model path or extern:<command>")
      ->required();
  score_cmd->add_option("--model", score_args.model, "condlm model file (for --scorer condlm)");
  score_cmd->add_option("--dataset", score_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--outputs", score_args.outputs, "Outputs JSONL (repeatable)")->required();
  score_cmd->add_flag("--per-segment", per_segment, "Write id,system,score rows instead of system means");
  score_cmd->add_flag("--include-reference", include_reference,
                      "Add a REFERENCE row scoring the human references (reference-free scorers only)");
  score_cmd->add_option("--out", score_args.out, "CSV to write")->required();
  add_jobs(score_cmd, score_args);
  add_tokenizer(score_cmd, score_args);

  // decode ------------------------------------------------------------------
  Common decode_args;
  DecodeConfig decode_config;
  std::string decode_system = "decode";
  auto* decode = app.add_subcommand("decode", "Beam-search the best output under a condlm model");
  decode->add_option("--model", decode_args.model, "condlm model file")->required()->check(CLI::ExistingFile);
  decode->add_option("--dataset", decode_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  decode->add_option("--beam", decode_config.beam_width, "Beam width")->capture_default_str();
  decode->add_option("--max-len", decode_config.max_len, "Maximum output length in tokens")->capture_default_str();
  decode->add_option("--system-name", decode_system, "System name for the outputs")->capture_default_str();
  decode->add_option("--out", decode_args.out, "Outputs JSONL to write")->required();
  add_jobs(decode, decode_args);

  // nbest -------------------------------------------------------------------
  Common nbest_args;
  DecodeConfig nbest_config;
  std::size_t nbest_size = 0;
  std::string nbest_system = "base";
  auto* nbest_cmd = app.add_subcommand("nbest", "Write beam-search candidate sets from a base model");
  nbest_cmd->add_option("--model", nbest_args.model, "Base condlm model file")->required()->check(CLI::ExistingFile);
  nbest_cmd->add_option("--dataset", nbest_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  nbest_cmd->add_option("--beam", nbest_config.beam_width, "Beam width")->capture_default_str();
  nbest_cmd->add_option("--max-len", nbest_config.max_len, "Maximum output length")->capture_default_str();
  nbest_cmd->add_option("--size", nbest_size, "Candidates per segment (default: beam width)");
  nbest_cmd->add_option("--system-name", nbest_system, "System name for the candidate sets")->capture_default_str();
  nbest_cmd->add_option("--out", nbest_args.out, "Candidates JSONL to write")->required();
  add_jobs(nbest_cmd, nbest_args);

  // greedy-extract ----------------------------------------------------------
  Common greedy_args;
  ExtractOptions extract;
  std::string trace_path;
  std::string greedy_system = "greedy";
  auto* greedy = app.add_subcommand("greedy-extract", "Greedy extractive summaries under a reference-free scorer");
  greedy->add_option("--scorer", greedy_args.scorer, "Reference-free scorer")->required();
  greedy->add_option("--model", greedy_args.model, "condlm model file (for --scorer condlm)");
  greedy->add_option("--dataset", greedy_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  greedy->add_option("-k,--summary-k", extract.summary_k, "Target summary length in sentences")
      ->capture_default_str();
  greedy->add_flag("--early-stop", extract.early_stop, "Stop when no sentence improves the score");
  greedy->add_option("--trace", trace_path, "Write per-round JSONL trace here");
  greedy->add_option("--system-name", greedy_system, "System name for the outputs")->capture_default_str();
  greedy->add_option("--out", greedy_args.out, "Outputs JSONL to write")->required();
  add_jobs(greedy, greedy_args);
  add_tokenizer(greedy, greedy_args);

  // rerank ------------------------------------------------------------------
  Common rerank_args;
  std::string candidates_path;
  std::string candidate_system;
  std::string rerank_system = "rerank";
  auto* rerank_cmd = app.add_subcommand("rerank", "Rerank candidate sets with a reference-free scorer");
  rerank_cmd->add_option("--scorer", rerank_args.scorer, "Reference-free scorer")->required();
  rerank_cmd->add_option("--model", rerank_args.model, "condlm model file (for --scorer condlm)");
  rerank_cmd->add_option("--dataset", rerank_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  rerank_cmd->add_option("--candidates", candidates_path, "Candidates JSONL")->required()->check(CLI::ExistingFile);
  rerank_cmd->add_option("--candidate-system", candidate_system,
                         "Use only candidate sets from this system (required if several exist per segment)");
  rerank_cmd->add_option("--system-name", rerank_system, "System name for the outputs")->capture_default_str();
  rerank_cmd->add_option("--out", rerank_args.out, "Outputs JSONL to write")->required();
  add_jobs(rerank_cmd, rerank_args);
  add_tokenizer(rerank_cmd, rerank_args);

  // pseudo-ref --------------------------------------------------------------
  Common pseudo_args;
  std::string ref_based_name;
  std::string procedure_name;
  DecodeConfig pseudo_decode;
  ExtractOptions pseudo_extract;
  std::string pseudo_candidates;
  std::string pseudo_out_dir;
  auto* pseudo = app.add_subcommand("pseudo-ref", "Correlate a reference-free scorer with a metric on pseudo-references");
  pseudo->add_option("--ref-free", pseudo_args.scorer, "Reference-free scorer")->required();
  pseudo->add_option("--ref-based", ref_based_name, "Reference-based metric")->required();
  pseudo->add_option("--procedure", procedure_name, "direct, greedy or rerank")->required();
  pseudo->add_option("--model", pseudo_args.model, "condlm model (for condlm / direct)");
  pseudo->add_option("--dataset", pseudo_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  pseudo->add_option("--outputs", pseudo_args.outputs, "Outputs JSONL (repeatable)")->required();
  pseudo->add_option("--beam", pseudo_decode.beam_width, "Beam width (direct)")->capture_default_str();
  pseudo->add_option("--max-len", pseudo_decode.max_len, "Maximum length (direct)")->capture_default_str();
  pseudo->add_option("-k,--summary-k", pseudo_extract.summary_k, "Summary length (greedy)")->capture_default_str();
  pseudo->add_option("--candidates", pseudo_candidates, "Candidates JSONL (rerank)");
  pseudo->add_option("--out-dir", pseudo_out_dir, "Directory for tables, pseudo-references and report")->required();
  add_jobs(pseudo, pseudo_args);
  add_tokenizer(pseudo, pseudo_args);

  // bias-report -------------------------------------------------------------
  Common bias_args;
  std::string bias_csv;
  auto* bias = app.add_subcommand("bias-report", "Rank systems and the human reference under a reference-free scorer");
  bias->add_option("--scorer", bias_args.scorer, "Reference-free scorer")->required();
  bias->add_option("--model", bias_args.model, "condlm model file (for --scorer condlm)");
  bias->add_option("--dataset", bias_args.dataset, "Dataset JSONL with references")->required()->check(CLI::ExistingFile);
  bias->add_option("--outputs", bias_args.outputs, "Outputs JSONL (repeatable)")->required();
  bias->add_option("--out", bias_args.out, "JSON report to write")->required();
  bias->add_option("--csv", bias_csv, "Also write the ranked table as CSV");
  add_jobs(bias, bias_args);
  add_tokenizer(bias, bias_args);

  // correlate ---------------------------------------------------------------
  std::string csv_a;
  std::string csv_b;
  std::string correlate_out;
  auto* corr = app.add_subcommand("correlate", "Pearson correlation of two system-level score CSVs");
  corr->add_option("--a", csv_a, "First system-level CSV")->required()->check(CLI::ExistingFile);
  corr->add_option("--b", csv_b, "Second system-level CSV")->required()->check(CLI::ExistingFile);
  corr->add_option("--out", correlate_out, "Also write a JSON report");

  // two-axis ----------------------------------------------------------------
  std::string axis_a;
  std::string axis_b;
  std::string axis_out;
  auto* axis = app.add_subcommand("two-axis", "Per-system scores and ranks under two metrics, as CSV");
  axis->add_option("--a", axis_a, "First system-level CSV")->required()->check(CLI::ExistingFile);
  axis->add_option("--b", axis_b, "Second system-level CSV")->required()->check(CLI::ExistingFile);
  axis->add_option("--out", axis_out, "CSV to write")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunMetadata meta;
    meta.command = cmdline;

    if (*gen) {
      const auto bench = generate_synthetic_benchmark(seed, n_segments, n_systems, noise);
      fs::create_directories(out_dir);
      const fs::path dataset = fs::path(out_dir) / "dataset.jsonl";
      const fs::path outputs = fs::path(out_dir) / "outputs.jsonl";
      std::string noise_text;
      for (double p : noise) noise_text += (noise_text.empty() ? "" : ",") + format_double(p);
      meta.settings = {{"seed", std::to_string(seed)},
                       {"segments", std::to_string(n_segments)},
                       {"systems", std::to_string(n_systems)},
                       {"noise", noise_text}};
      save_dataset(dataset, bench.segments);
      save_sidecar_metadata(dataset, meta);
      save_outputs(outputs, bench.outputs);
      save_sidecar_metadata(outputs, meta);
      out << "wrote " << bench.segments.size() << " segments and " << bench.outputs.size()
          << " outputs to " << out_dir << '\n';
      return 0;
    }

    if (*train) {
      lm_config.tokenizer = train_args.tokenizer();
      const auto segments = load_dataset(train_args.dataset);
      ParallelCorpus corpus;
      for (const auto& seg : segments) {
        if (!seg.reference) {
          throw ValidationError(train_args.dataset + ": segment " + seg.id + " has no reference");
        }
        corpus.emplace_back(tokenize(seg.source, lm_config.tokenizer),
                            tokenize(*seg.reference, lm_config.tokenizer));
      }
      const auto model = CondLmModel::train(corpus, lm_config);
      ensure_parent(train_args.out);
      save_model(train_args.out, model);
      out << "trained order-" << model.order() << " model, vocabulary " << model.vocab_size()
          << ", " << corpus.size() << " pairs\n";
      return 0;
    }

    if (*score_cmd) {
      const auto scorer = resolve_scorer(score_args.scorer, score_args.model, score_args.tokenizer());
      const auto segments = load_dataset(score_args.dataset);
      const auto outputs = load_all_outputs(score_args.outputs);
      meta.tokenizer = scorer.tokenizer;
      meta.settings = scorer_settings(*scorer.handle);
      const ScoreOptions options{scorer.tokenizer, score_args.jobs};
      const auto scores = segment_scores(*scorer.handle, segments, outputs, include_reference, options);
      auto file = open_out(score_args.out);
      if (per_segment) {
        write_segment_scores_csv(file, scores, meta);
      } else {
        const auto table = aggregate(scores);
        write_system_table_csv(file, table, meta);
        print_table(out, table);
      }
      return 0;
    }

    if (*decode) {
      auto model = load_shared_model(decode_args.model);
      const auto segments = load_dataset(decode_args.dataset);
      OptimizeRequest request;
      request.procedure = Procedure::direct;
      request.model = model;
      request.decode = decode_config;
      request.jobs = decode_args.jobs;
      meta.tokenizer = model->tokenizer();
      meta.settings = {{"procedure", "direct"},
                       {"scorer", "condlm"},
                       {"model", decode_args.model},
                       {"beam", std::to_string(decode_config.beam_width)},
                       {"max_len", std::to_string(decode_config.max_len)}};
      const auto outcomes = optimize_dataset(segments, request);
      return write_outcomes(outcomes, decode_system, decode_args.out, meta, err) ? 0 : 2;
    }

    if (*nbest_cmd) {
      const auto model = load_model(nbest_args.model);
      const auto segments = load_dataset(nbest_args.dataset);
      const std::size_t size =
          nbest_size == 0 ? static_cast<std::size_t>(std::max(1, nbest_config.beam_width)) : nbest_size;
      std::vector<CandidateSet> sets;
      for (const auto& seg : segments) {
        sets.push_back(nbest(model, tokenize(seg.source, model.tokenizer()), nbest_config, size,
                             seg.id, nbest_system));
      }
      meta.tokenizer = model.tokenizer();
      meta.settings = {{"model", nbest_args.model},
                       {"beam", std::to_string(nbest_config.beam_width)},
                       {"max_len", std::to_string(nbest_config.max_len)},
                       {"size", std::to_string(size)},
                       {"base_score", "summed log-probability"}};
      ensure_parent(nbest_args.out);
      save_candidates(nbest_args.out, sets);
      save_sidecar_metadata(nbest_args.out, meta);
      return 0;
    }

    if (*greedy) {
      const auto scorer = resolve_scorer(greedy_args.scorer, greedy_args.model, greedy_args.tokenizer());
      const auto segments = load_dataset(greedy_args.dataset);
      extract.tokenizer = scorer.tokenizer;
      meta.tokenizer = scorer.tokenizer;
      meta.settings = scorer_settings(*scorer.handle);
      meta.settings.emplace_back("procedure", "greedy_extract");
      meta.settings.emplace_back("summary_k", std::to_string(extract.summary_k));
      meta.settings.emplace_back("early_stop", extract.early_stop ? "true" : "false");
      std::vector<SegmentOutcome> outcomes;
      if (!trace_path.empty()) {
        auto trace_file = open_out(trace_path);
        for (const auto& seg : segments) {
          SegmentOutcome outcome;
          outcome.segment_id = seg.id;
          std::vector<GreedyRound> rounds;
          try {
            outcome.output = greedy_extract(*scorer.handle, tokenize(seg.source, scorer.tokenizer),
                                            seg.document_sentences(), extract, &rounds, seg.id);
          } catch (const ValidationError& e) {
            outcome.error = e.what();
          }
          write_greedy_trace(trace_file, seg.id, rounds);
          outcomes.push_back(std::move(outcome));
        }
      } else {
        OptimizeRequest request;
        request.procedure = Procedure::greedy_extract;
        request.scorer = scorer.handle;
        request.extract = extract;
        request.tokenizer = scorer.tokenizer;
        request.jobs = greedy_args.jobs;
        outcomes = optimize_dataset(segments, request);
      }
      return write_outcomes(outcomes, greedy_system, greedy_args.out, meta, err) ? 0 : 2;
    }

    if (*rerank_cmd) {
      const auto scorer = resolve_scorer(rerank_args.scorer, rerank_args.model, rerank_args.tokenizer());
      const auto segments = load_dataset(rerank_args.dataset);
      std::map<std::string, CandidateSet> by_segment;
      for (auto& set : load_candidates(candidates_path)) {
        if (!candidate_system.empty() && set.system_name != candidate_system) continue;
        const auto id = set.segment_id;
        if (!by_segment.emplace(id, std::move(set)).second) {
          throw ValidationError(candidates_path + ": several candidate sets for segment " + id +
                                "; pick one with --candidate-system");
        }
      }
      OptimizeRequest request;
      request.procedure = Procedure::rerank;
      request.scorer = scorer.handle;
      request.candidates = &by_segment;
      request.tokenizer = scorer.tokenizer;
      request.jobs = rerank_args.jobs;
      meta.tokenizer = scorer.tokenizer;
      meta.settings = scorer_settings(*scorer.handle);
      meta.settings.emplace_back("procedure", "rerank");
      meta.settings.emplace_back("candidates", candidates_path);
      const auto outcomes = optimize_dataset(segments, request);
      return write_outcomes(outcomes, rerank_system, rerank_args.out, meta, err) ? 0 : 2;
    }

    if (*pseudo) {
      const auto ref_free = resolve_scorer(pseudo_args.scorer, pseudo_args.model, pseudo_args.tokenizer());
      const auto ref_based = make_builtin_metric(ref_based_name);
      const auto segments = load_dataset(pseudo_args.dataset);
      const auto outputs = load_all_outputs(pseudo_args.outputs);
      OptimizeRequest request;
      request.procedure = parse_procedure(procedure_name);
      request.scorer = ref_free.handle;
      request.tokenizer = ref_free.tokenizer;
      request.decode = pseudo_decode;
      pseudo_extract.tokenizer = ref_free.tokenizer;
      request.extract = pseudo_extract;
      std::map<std::string, CandidateSet> by_segment;
      if (request.procedure == Procedure::direct) {
        request.model = ref_free.model;
        if (!request.model) {
          throw ValidationError("--procedure direct needs a condlm reference-free scorer");
        }
      }
      if (request.procedure == Procedure::rerank) {
        if (pseudo_candidates.empty()) throw ValidationError("--procedure rerank needs --candidates");
        for (auto& set : load_candidates(pseudo_candidates)) {
          const auto id = set.segment_id;
          if (!by_segment.emplace(id, std::move(set)).second) {
            throw ValidationError(pseudo_candidates + ": several candidate sets for segment " + id);
          }
        }
        request.candidates = &by_segment;
      }
      const ScoreOptions options{ref_free.tokenizer, pseudo_args.jobs};
      const auto result =
          pseudo_reference_eval(ref_free.handle, ref_based, segments, outputs, request, options);

      meta.tokenizer = ref_free.tokenizer;
      meta.settings = scorer_settings(*ref_free.handle);
      meta.settings.emplace_back("ref_based", ref_based_name);
      meta.settings.emplace_back("procedure", std::string(to_string(request.procedure)));
      const fs::path dir(pseudo_out_dir);
      fs::create_directories(dir);
      {
        auto f = open_out(dir / "ref_free.csv");
        write_system_table_csv(f, result.ref_free, meta);
      }
      {
        auto f = open_out(dir / "ref_based.csv");
        write_system_table_csv(f, result.ref_based, meta);
      }
      std::vector<SystemOutput> refs;
      for (const auto& o : result.pseudo_references) {
        refs.push_back({o.segment_id, "pseudo-reference", o.output->text});
      }
      save_outputs(dir / "pseudo_refs.jsonl", refs);
      save_sidecar_metadata(dir / "pseudo_refs.jsonl", meta);

      ordered_json report;
      report["meta"] = ordered_json::parse(meta.to_json());
      report["metric_a"] = result.correlation.metric_a;
      report["metric_b"] = result.correlation.metric_b;
      report["pearson_r"] = result.correlation.pearson_r;
      report["n"] = result.correlation.n;
      report["systems"] = result.correlation.systems;
      auto f = open_out(dir / "correlation.json");
      f << report.dump(2) << '\n';
      out << "pearson_r " << print_number(result.correlation.pearson_r) << " over "
          << result.correlation.n << " systems\n";
      return 0;
    }

    if (*bias) {
      const auto scorer = resolve_scorer(bias_args.scorer, bias_args.model, bias_args.tokenizer());
      const auto segments = load_dataset(bias_args.dataset);
      const auto outputs = load_all_outputs(bias_args.outputs);
      const ScoreOptions options{scorer.tokenizer, bias_args.jobs};
      const auto report = bias_report(*scorer.handle, segments, outputs, options);
      meta.tokenizer = scorer.tokenizer;
      meta.settings = scorer_settings(*scorer.handle);

      ordered_json doc;
      doc["meta"] = ordered_json::parse(meta.to_json());
      doc["metric"] = report.table.metric_name;
      doc["reference_rank"] = report.reference_rank;
      doc["n_above_reference"] = report.above_reference.size();
      doc["above_reference"] = report.above_reference;
      doc["rows"] = ordered_json::array();
      for (std::size_t i = 0; i < report.table.rows.size(); ++i) {
        const auto& row = report.table.rows[i];
        doc["rows"].push_back({{"rank", i + 1},
                               {"system", row.system},
                               {"score", row.corpus_score},
                               {"n_segments", row.n_segments}});
      }
      auto f = open_out(bias_args.out);
      f << doc.dump(2) << '\n';
      if (!bias_csv.empty()) {
        auto c = open_out(bias_csv);
        write_system_table_csv(c, report.table, meta);
      }
      print_table(out, report.table);
      out << "REFERENCE rank " << report.reference_rank << "; " << report.above_reference.size()
          << " system(s) above it\n";
      return 0;
    }

    if (*corr) {
      const auto a = load_system_table_csv(csv_a);
      const auto b = load_system_table_csv(csv_b);
      const auto report = correlate(a, b);
      out << print_number(report.pearson_r) << '\n';
      if (!correlate_out.empty()) {
        ordered_json doc;
        doc["meta"] = ordered_json::parse(meta.to_json());
        doc["metric_a"] = report.metric_a;
        doc["metric_b"] = report.metric_b;
        doc["pearson_r"] = report.pearson_r;
        doc["n"] = report.n;
        doc["systems"] = report.systems;
        auto f = open_out(correlate_out);
        f << doc.dump(2) << '\n';
      }
      return 0;
    }

    if (*axis) {
      const auto a = load_system_table_csv(axis_a);
      const auto b = load_system_table_csv(axis_b);
      meta.settings = {{"metric_a", a.metric_name}, {"metric_b", b.metric_name}};
      auto f = open_out(axis_out);
      write_two_axis_csv(f, two_axis_ranking(a, b), meta);
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace mg::cli
