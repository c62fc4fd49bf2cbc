#include "mg/text.hpp"

#include <cstdint>

#include "mg/error.hpp"
#include "mg/types.hpp"

namespace mg {
namespace {

bool is_unicode_space(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

// Decodes one code point at `pos`; malformed bytes decode as themselves
// with length 1 so they are never mistaken for whitespace.
std::uint32_t decode_at(std::string_view text, std::size_t pos, std::size_t& length) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t need = 0;
  std::uint32_t cp = lead;
  if (lead >= 0xC0 && lead < 0xE0) { need = 1; cp = lead & 0x1F; }
  else if (lead >= 0xE0 && lead < 0xF0) { need = 2; cp = lead & 0x0F; }
  else if (lead >= 0xF0 && lead < 0xF8) { need = 3; cp = lead & 0x07; }
  if (need == 0 || pos + need >= text.size()) {
    length = 1;
    return lead;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    const auto c = static_cast<unsigned char>(text[pos + i]);
    if ((c & 0xC0) != 0x80) {
      length = 1;
      return lead;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  length = need + 1;
  return cp;
}

}  // namespace

TokenSequence tokenize(std::string_view text, const TokenizerConfig& config) {
  TokenSequence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t length = 1;
    const std::uint32_t cp = decode_at(text, pos, length);
    if (is_unicode_space(cp)) {
      flush();
    } else if (length == 1 && is_ascii_punct(static_cast<unsigned char>(text[pos]))) {
      flush();
      tokens.emplace_back(1, text[pos]);
    } else if (length == 1) {
      char c = text[pos];
      if (config.lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(pos, length));
    }
    pos += length;
  }
  flush();
  return tokens;
}

std::string detokenize(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  auto push_trimmed = [&](std::string_view span) {
    const auto first = span.find_first_not_of(" \t\n\r\f\v");
    if (first == std::string_view::npos) return;
    const auto last = span.find_last_not_of(" \t\n\r\f\v");
    sentences.emplace_back(span.substr(first, last - first + 1));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == text.size();
    if (!at_end) {
      std::size_t length = 1;
      if (!is_unicode_space(decode_at(text, i + 1, length))) continue;
    }
    push_trimmed(text.substr(start, i + 1 - start));
    start = i + 1;
  }
  push_trimmed(text.substr(start));
  return sentences;
}

std::string_view to_string(DomainKind kind) {
  return kind == DomainKind::translation ? "translation" : "summarization";
}

DomainKind parse_domain_kind(std::string_view text) {
  if (text == "translation") return DomainKind::translation;
  if (text == "summarization") return DomainKind::summarization;
  throw ValidationError("unknown domain_kind '" + std::string(text) + "'");
}

std::vector<std::string> Segment::document_sentences() const {
  if (sentences) return *sentences;
  return split_sentences(source);
}

}  // namespace mg
