#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mg {

// Output of the canonical tokenizer. Tokens never contain whitespace.
using TokenSequence = std::vector<std::string>;

struct TokenizerConfig {
  bool lowercase = true;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

// Lowercases (ASCII), splits on unicode whitespace and detaches every ASCII
// punctuation character as its own token.
TokenSequence tokenize(std::string_view text, const TokenizerConfig& config = {});

// Joins with single spaces. tokenize(detokenize(t)) == t for canonical t.
std::string detokenize(const TokenSequence& tokens);

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
// Delimiters stay with the preceding sentence; surrounding whitespace is
// trimmed. Text without a delimiter is returned as one sentence.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace mg
