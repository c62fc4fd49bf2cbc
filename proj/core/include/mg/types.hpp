#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mg {

enum class DomainKind { translation, summarization };

std::string_view to_string(DomainKind kind);
DomainKind parse_domain_kind(std::string_view text);

// One evaluation unit: the input text, an optional human reference and,
// for summarization, optional pre-split document sentences.
struct Segment {
  std::string id;
  std::string source;
  std::optional<std::string> reference;
  std::optional<std::vector<std::string>> sentences;
  DomainKind domain_kind = DomainKind::translation;

  // Pre-split sentences when present, otherwise split_sentences(source).
  std::vector<std::string> document_sentences() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SystemOutput {
  std::string segment_id;
  std::string system_name;
  std::string output;

  friend bool operator==(const SystemOutput&, const SystemOutput&) = default;
};

}  // namespace mg
