#include "mg/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mg/error.hpp"

namespace mg {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(std::string_view name, std::size_t line, const std::string& message) {
  throw ValidationError(std::string(name) + ":" + std::to_string(line) + ": " + message);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(path.string() + ": write failed");
}

// Calls fn(line_number, object) for every line; rejects BOMs, blank lines
// and anything that is not a JSON object.
template <typename Fn>
void for_each_jsonl(std::istream& in, std::string_view name, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
      fail(name, number, "byte-order mark is not allowed");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) fail(name, number, "empty line");
    json value;
    try {
      value = json::parse(line);
    } catch (const json::exception& e) {
      fail(name, number, std::string("malformed JSON: ") + e.what());
    }
    if (!value.is_object()) fail(name, number, "expected a JSON object");
    fn(number, value);
  }
}

std::string require_string(const json& obj, const char* key, std::string_view name,
                           std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(name, line, std::string("missing required field \"") + key + "\"");
  if (!it->is_string()) fail(name, line, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

// Absent and null both mean "no value".
const json* optional_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string quote(std::string_view text) { return json(std::string(text)).dump(); }

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

double parse_double(std::string_view text, std::string_view name, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail(name, line, "invalid number '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view name, std::size_t line) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(name, line, "invalid integer '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Dataset

std::vector<Segment> read_dataset(std::istream& in, std::string_view name) {
  std::vector<Segment> segments;
  std::set<std::string> ids;
  for_each_jsonl(in, name, [&](std::size_t line, const json& obj) {
    Segment seg;
    seg.id = require_string(obj, "id", name, line);
    if (seg.id.empty()) fail(name, line, "field \"id\" must be non-empty");
    if (!ids.insert(seg.id).second) fail(name, line, "duplicate id \"" + seg.id + "\"");
    seg.source = require_string(obj, "source", name, line);
    if (tokenize(seg.source).empty()) fail(name, line, "field \"source\" has no tokens");
    if (const auto* ref = optional_field(obj, "reference")) {
      if (!ref->is_string()) fail(name, line, "field \"reference\" must be a string or null");
      seg.reference = ref->get<std::string>();
    }
    if (const auto* sentences = optional_field(obj, "sentences")) {
      if (!sentences->is_array()) fail(name, line, "field \"sentences\" must be an array or null");
      std::vector<std::string> list;
      for (const auto& s : *sentences) {
        if (!s.is_string()) fail(name, line, "field \"sentences\" must contain strings");
        list.push_back(s.get<std::string>());
      }
      seg.sentences = std::move(list);
    }
    try {
      seg.domain_kind = parse_domain_kind(require_string(obj, "domain_kind", name, line));
    } catch (const ValidationError& e) {
      if (std::string_view(e.what()).rfind(std::string(name) + ":", 0) == 0) throw;
      fail(name, line, e.what());
    }
    segments.push_back(std::move(seg));
  });
  return segments;
}

std::vector<Segment> load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const std::vector<Segment>& segments) {
  for (const auto& seg : segments) {
    out << "{\"id\":" << quote(seg.id) << ",\"source\":" << quote(seg.source)
        << ",\"reference\":" << (seg.reference ? quote(*seg.reference) : "null")
        << ",\"sentences\":";
    if (seg.sentences) {
      out << '[';
      for (std::size_t i = 0; i < seg.sentences->size(); ++i) {
        if (i > 0) out << ',';
        out << quote((*seg.sentences)[i]);
      }
      out << ']';
    } else {
      out << "null";
    }
    out << ",\"domain_kind\":" << quote(to_string(seg.domain_kind)) << "}\n";
  }
}

void save_dataset(const std::filesystem::path& path, const std::vector<Segment>& segments) {
  auto out = open_output(path);
  write_dataset(out, segments);
  finish(out, path);
}

// ---------------------------------------------------------------------------
// Outputs

std::vector<SystemOutput> read_outputs(std::istream& in, std::string_view name) {
  std::vector<SystemOutput> outputs;
  std::set<std::pair<std::string, std::string>> keys;
  for_each_jsonl(in, name, [&](std::size_t line, const json& obj) {
    SystemOutput out;
    out.segment_id = require_string(obj, "id", name, line);
    out.system_name = require_string(obj, "system", name, line);
    out.output = require_string(obj, "output", name, line);
    if (out.system_name.empty()) fail(name, line, "field \"system\" must be non-empty");
    if (!keys.emplace(out.segment_id, out.system_name).second) {
      fail(name, line, "duplicate (id, system) pair (\"" + out.segment_id + "\", \"" +
                           out.system_name + "\")");
    }
    outputs.push_back(std::move(out));
  });
  return outputs;
}

std::vector<SystemOutput> load_outputs(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_outputs(in, path.string());
}

void write_outputs(std::ostream& out, const std::vector<SystemOutput>& outputs) {
  for (const auto& o : outputs) {
    out << "{\"id\":" << quote(o.segment_id) << ",\"system\":" << quote(o.system_name)
        << ",\"output\":" << quote(o.output) << "}\n";
  }
}

void save_outputs(const std::filesystem::path& path, const std::vector<SystemOutput>& outputs) {
  auto out = open_output(path);
  write_outputs(out, outputs);
  finish(out, path);
}

// ---------------------------------------------------------------------------
// Candidates

std::vector<CandidateSet> read_candidates(std::istream& in, std::string_view name) {
  std::vector<CandidateSet> sets;
  std::set<std::pair<std::string, std::string>> keys;
  for_each_jsonl(in, name, [&](std::size_t line, const json& obj) {
    CandidateSet set;
    set.segment_id = require_string(obj, "id", name, line);
    set.system_name = require_string(obj, "system", name, line);
    if (!keys.emplace(set.segment_id, set.system_name).second) {
      fail(name, line, "duplicate (id, system) pair (\"" + set.segment_id + "\", \"" +
                           set.system_name + "\")");
    }
    const auto it = obj.find("candidates");
    if (it == obj.end()) fail(name, line, "missing required field \"candidates\"");
    if (!it->is_array() || it->empty()) {
      fail(name, line, "field \"candidates\" must be a non-empty array");
    }
    for (const auto& c : *it) {
      if (!c.is_object()) fail(name, line, "each candidate must be an object");
      Candidate cand;
      cand.text = require_string(c, "text", name, line);
      const auto score = c.find("base_score");
      if (score == c.end()) fail(name, line, "candidate is missing \"base_score\"");
      if (!score->is_number()) fail(name, line, "\"base_score\" must be a number");
      cand.base_score = score->get<double>();
      if (!std::isfinite(cand.base_score)) fail(name, line, "\"base_score\" must be finite");
      set.candidates.push_back(std::move(cand));
    }
    sets.push_back(std::move(set));
  });
  return sets;
}

std::vector<CandidateSet> load_candidates(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_candidates(in, path.string());
}

void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets) {
  for (const auto& set : sets) {
    out << "{\"id\":" << quote(set.segment_id) << ",\"system\":" << quote(set.system_name)
        << ",\"candidates\":[";
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      if (i > 0) out << ',';
      out << "{\"text\":" << quote(set.candidates[i].text)
          << ",\"base_score\":" << format_double(set.candidates[i].base_score) << '}';
    }
    out << "]}\n";
  }
}

void save_candidates(const std::filesystem::path& path, const std::vector<CandidateSet>& sets) {
  auto out = open_output(path);
  write_candidates(out, sets);
  finish(out, path);
}

// ---------------------------------------------------------------------------
// Model file
//
//   mg-condlm condlm/1
//   order 3
//   copy_weight <double>
//   copy_alpha <double>
//   interp_weights <double> x order
//   lowercase 0|1
//   vocab <n>
//   <token>                                  (n lines, sorted)
//   counts <m>
//   <order>\t<context tokens>\t<token>\t<count>   (m lines)
//   end

void write_model(std::ostream& out, const CondLmModel& model) {
  out << "mg-condlm " << CondLmModel::kFormatVersion << '\n';
  out << "order " << model.order() << '\n';
  out << "copy_weight " << format_double(model.copy_weight()) << '\n';
  out << "copy_alpha " << format_double(model.copy_alpha()) << '\n';
  out << "interp_weights";
  for (double w : model.interp_weights()) out << ' ' << format_double(w);
  out << '\n';
  out << "lowercase " << (model.tokenizer().lowercase ? 1 : 0) << '\n';
  out << "vocab " << model.vocab_size() << '\n';
  for (const auto& token : model.vocab()) out << token << '\n';
  const auto entries = model.count_entries();
  out << "counts " << entries.size() << '\n';
  for (const auto& e : entries) {
    out << e.order << '\t' << detokenize(e.context) << '\t' << e.token << '\t' << e.count << '\n';
  }
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const CondLmModel& model) {
  auto out = open_output(path);
  write_model(out, model);
  finish(out, path);
}

CondLmModel read_model(std::istream& in, std::string_view name) {
  std::string line;
  std::size_t number = 0;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) fail(name, number + 1, "unexpected end of model file");
    ++number;
    return line;
  };
  auto keyed = [&](std::string_view key) -> std::string {
    const auto& l = next();
    if (l.rfind(std::string(key) + " ", 0) != 0) {
      fail(name, number, "expected \"" + std::string(key) + "\"");
    }
    return l.substr(key.size() + 1);
  };

  const std::string header = next();
  if (header.rfind("mg-condlm ", 0) != 0) fail(name, number, "not a condlm model file");
  const std::string version = header.substr(10);
  if (version != CondLmModel::kFormatVersion) {
    fail(name, number, "unsupported model version '" + version + "' (expected " +
                           std::string(CondLmModel::kFormatVersion) + ")");
  }

  CondLmConfig config;
  config.order = static_cast<int>(parse_int(keyed("order"), name, number));
  config.copy_weight = parse_double(keyed("copy_weight"), name, number);
  config.copy_alpha = parse_double(keyed("copy_alpha"), name, number);
  {
    std::istringstream weights(keyed("interp_weights"));
    std::string w;
    while (weights >> w) config.interp_weights.push_back(parse_double(w, name, number));
  }
  const auto lowercase = keyed("lowercase");
  if (lowercase != "0" && lowercase != "1") fail(name, number, "lowercase must be 0 or 1");
  config.tokenizer.lowercase = lowercase == "1";

  const auto vocab_size = parse_int(keyed("vocab"), name, number);
  if (vocab_size < 0) fail(name, number, "negative vocabulary size");
  TokenSequence vocab;
  for (std::int64_t i = 0; i < vocab_size; ++i) vocab.push_back(next());

  const auto n_entries = parse_int(keyed("counts"), name, number);
  if (n_entries < 0) fail(name, number, "negative count table size");
  std::vector<CondLmModel::CountEntry> entries;
  for (std::int64_t i = 0; i < n_entries; ++i) {
    const auto& l = next();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = l.find('\t', start);
      fields.push_back(l.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) fail(name, number, "count line needs 4 tab-separated fields");
    CondLmModel::CountEntry entry;
    entry.order = static_cast<int>(parse_int(fields[0], name, number));
    // Split on spaces only; markers such as <s> must not be re-tokenized.
    std::istringstream ctx(fields[1]);
    for (std::string t; ctx >> t;) entry.context.push_back(t);
    entry.token = fields[2];
    entry.count = parse_int(fields[3], name, number);
    entries.push_back(std::move(entry));
  }
  if (next() != "end") fail(name, number, "expected \"end\"");

  try {
    return CondLmModel::from_parts(config, vocab, entries);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  }
}

CondLmModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_model(in, path.string());
}

// ---------------------------------------------------------------------------

void write_greedy_trace(std::ostream& out, std::string_view segment_id,
                        const std::vector<GreedyRound>& rounds) {
  for (const auto& round : rounds) {
    out << "{\"id\":" << quote(segment_id) << ",\"round\":" << round.round
        << ",\"score_before\":" << format_double(round.score_before)
        << ",\"chosen\":" << round.chosen << ",\"candidates\":[";
    for (std::size_t i = 0; i < round.scores.size(); ++i) {
      if (i > 0) out << ',';
      const auto& [index, value] = round.scores[i];
      out << "{\"index\":" << index << ",\"score\":" << format_double(value)
          << ",\"gain\":" << format_double(value - round.score_before) << '}';
    }
    out << "]}\n";
  }
}

// ---------------------------------------------------------------------------
// Metadata and CSV

std::string RunMetadata::to_json() const {
  ordered_json meta;
  meta["tool"] = "mg";
  meta["version"] = MG_VERSION;
  meta["command"] = command;
  meta["tokenizer"] = {{"scheme", "canonical"}, {"lowercase", tokenizer.lowercase}};
  ordered_json s = ordered_json::object();
  for (const auto& [key, value] : settings) s[key] = value;
  meta["settings"] = s;
  meta["aggregation"] = "unweighted segment mean";
  return meta.dump();
}

void save_sidecar_metadata(const std::filesystem::path& path, const RunMetadata& meta) {
  const auto sidecar = std::filesystem::path(path.string() + ".meta.json");
  auto out = open_output(sidecar);
  out << meta.to_json() << '\n';
  finish(out, sidecar);
}

void write_system_table_csv(std::ostream& out, const SystemScoreTable& table,
                            const RunMetadata& meta) {
  RunMetadata with_metric = meta;
  with_metric.settings.emplace_back("metric", table.metric_name);
  out << "# " << with_metric.to_json() << '\n';
  out << "system,score,n_segments\n";
  for (const auto& row : table.rows) {
    out << csv_field(row.system) << ',' << format_double(row.corpus_score) << ','
        << row.n_segments << '\n';
  }
}

SystemScoreTable read_system_table_csv(std::istream& in, std::string_view name) {
  SystemScoreTable table;
  table.metric_name = std::string(name);
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      try {
        const auto meta = json::parse(line.substr(1));
        const auto& settings = meta.at("settings");
        if (settings.contains("metric")) table.metric_name = settings.at("metric").get<std::string>();
      } catch (const json::exception&) {
        // Free-form comment.
      }
      continue;
    }
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() < 2 || fields[0] != "system" || fields[1] != "score") {
        fail(name, number, "expected header \"system,score[,n_segments]\"");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 2 || fields.size() > 3) fail(name, number, "expected 2 or 3 columns");
    SystemRow row;
    row.system = fields[0];
    row.corpus_score = parse_double(fields[1], name, number);
    row.n_segments = fields.size() == 3 ? static_cast<std::size_t>(parse_int(fields[2], name, number)) : 0;
    if (!seen.insert(row.system).second) fail(name, number, "duplicate system " + row.system);
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) fail(name, number + 1, "missing CSV header");
  return table;
}

SystemScoreTable load_system_table_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_system_table_csv(in, path.string());
}

void write_segment_scores_csv(std::ostream& out, const SegmentScores& scores,
                              const RunMetadata& meta) {
  RunMetadata with_metric = meta;
  with_metric.settings.emplace_back("metric", scores.metric_name);
  out << "# " << with_metric.to_json() << '\n';
  out << "id,system,score\n";
  for (const auto& [system, values] : scores.by_system) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << csv_field(scores.segment_ids[i]) << ',' << csv_field(system) << ','
          << format_double(values[i]) << '\n';
    }
  }
}

void write_two_axis_csv(std::ostream& out, const std::vector<TwoAxisRow>& rows,
                        const RunMetadata& meta) {
  out << "# " << meta.to_json() << '\n';
  out << "system,score_a,rank_a,score_b,rank_b\n";
  for (const auto& row : rows) {
    out << csv_field(row.system) << ',' << format_double(row.score_a) << ',' << row.rank_a << ','
        << format_double(row.score_b) << ',' << row.rank_b << '\n';
  }
}

}  // namespace mg
