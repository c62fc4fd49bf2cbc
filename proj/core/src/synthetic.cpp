#include <array>
#include <cstdio>
#include <random>
#include <string_view>
#include <unordered_map>

#include "mg/data_io.hpp"
#include "mg/error.hpp"

namespace mg {
namespace {

using WordClass = std::vector<std::string_view>;

const WordClass kDeterminers = {"the", "a", "this", "every", "some"};
const WordClass kAdjectives = {"red", "small", "old", "quick", "quiet", "bright", "heavy", "young"};
const WordClass kNouns = {"cat", "dog", "bird", "man", "woman", "child",
                          "house", "river", "tree", "car", "book", "city"};
const WordClass kVerbs = {"sees", "likes", "finds", "takes", "follows", "watches", "builds", "carries"};
const WordClass kPrepositions = {"near", "under", "behind", "with", "over"};
const WordClass kAdverbs = {"slowly", "often", "today", "again"};

// Content-word classes are rotated by one position; everything else maps to itself.
const std::unordered_map<std::string, std::string>& cipher_table() {
  static const auto table = [] {
    std::unordered_map<std::string, std::string> t;
    for (const auto* cls : {&kAdjectives, &kNouns, &kVerbs, &kAdverbs}) {
      for (std::size_t i = 0; i < cls->size(); ++i) {
        t.emplace((*cls)[i], (*cls)[(i + 1) % cls->size()]);
      }
    }
    return t;
  }();
  return table;
}

const std::vector<std::string>& all_words() {
  static const auto words = [] {
    std::vector<std::string> w;
    for (const auto* cls : {&kDeterminers, &kAdjectives, &kNouns, &kVerbs, &kPrepositions, &kAdverbs}) {
      for (auto word : *cls) w.emplace_back(word);
    }
    return w;
  }();
  return words;
}

// Draws are taken from raw engine output so the stream is identical on
// every standard library.
class Draw {
 public:
  explicit Draw(std::seed_seq& seq) : engine_(seq) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool chance(double p) { return uniform() < p; }
  std::string_view pick(const WordClass& cls) { return cls[index(cls.size())]; }

 private:
  std::mt19937_64 engine_;
};

void noun_phrase(Draw& draw, TokenSequence& out) {
  out.emplace_back(draw.pick(kDeterminers));
  if (draw.chance(0.5)) out.emplace_back(draw.pick(kAdjectives));
  out.emplace_back(draw.pick(kNouns));
}

TokenSequence sentence(Draw& draw) {
  TokenSequence out;
  noun_phrase(draw, out);
  out.emplace_back(draw.pick(kVerbs));
  noun_phrase(draw, out);
  if (draw.chance(0.3)) out.emplace_back(draw.pick(kAdverbs));
  if (draw.chance(0.4)) {
    out.emplace_back(draw.pick(kPrepositions));
    noun_phrase(draw, out);
  }
  out.emplace_back(".");
  return out;
}

}  // namespace

TokenSequence synthetic_cipher(const TokenSequence& source) {
  const auto& table = cipher_table();
  TokenSequence out;
  out.reserve(source.size());
  for (const auto& token : source) {
    const auto it = table.find(token);
    out.push_back(it == table.end() ? token : it->second);
  }
  return out;
}

std::string synthetic_system_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sys%02zu", index);
  return buf;
}

SyntheticBenchmark generate_synthetic_benchmark(std::uint64_t seed, std::size_t n_segments,
                                                std::size_t n_systems,
                                                const std::vector<double>& noise_levels) {
  if (noise_levels.size() != n_systems) {
    throw ValidationError("expected " + std::to_string(n_systems) + " noise levels, got " +
                          std::to_string(noise_levels.size()));
  }
  for (double p : noise_levels) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("noise level " + format_double(p) + " is outside [0, 1]");
    }
  }
  const auto lo = static_cast<std::uint32_t>(seed);
  const auto hi = static_cast<std::uint32_t>(seed >> 32);

  SyntheticBenchmark bench;
  std::vector<TokenSequence> references;
  {
    std::seed_seq seq{lo, hi, 0u};
    Draw draw(seq);
    for (std::size_t i = 0; i < n_segments; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "seg%05zu", i);
      const auto source = sentence(draw);
      references.push_back(synthetic_cipher(source));
      bench.segments.push_back(
          {id, detokenize(source), detokenize(references.back()), std::nullopt, DomainKind::translation});
    }
  }

  const auto& words = all_words();
  for (std::size_t s = 0; s < n_systems; ++s) {
    std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(s + 1)};
    Draw draw(seq);
    const std::string name = synthetic_system_name(s);
    for (std::size_t i = 0; i < n_segments; ++i) {
      TokenSequence output;
      for (const auto& token : references[i]) {
        if (!draw.chance(noise_levels[s])) {
          output.push_back(token);
        } else if (draw.chance(0.5)) {
          output.push_back(words[draw.index(words.size())]);
        }
      }
      bench.outputs.push_back({bench.segments[i].id, name, detokenize(output)});
    }
  }
  return bench;
}

}  // namespace mg
