#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mg/text.hpp"

namespace mg {

enum class ScorerKind { reference_free, reference_based };
enum class ScorerBackend { native_metric, native_condlm, external_bridge };

std::string_view to_string(ScorerKind kind);
std::string_view to_string(ScorerBackend backend);

struct ScorerInfo {
  std::string name;
  ScorerKind kind = ScorerKind::reference_free;
  ScorerBackend backend = ScorerBackend::native_metric;
  bool deterministic = true;
};

// A named scoring function. Implementations must be safe to call from
// several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual const ScorerInfo& info() const = 0;

  // `reference` is null for reference-free scorers. `context_id` names the
  // segment in error messages.
  virtual double evaluate(const TokenSequence& source, const TokenSequence& candidate,
                          const TokenSequence* reference,
                          std::string_view context_id) const = 0;
};

using ScorerHandle = std::shared_ptr<const Scorer>;

// Dispatches to the scorer's backend. Reference-free scorers never see the
// reference; reference-based scorers throw ValidationError without one.
// Non-finite results are rejected.
double score(const Scorer& scorer, const TokenSequence& source, const TokenSequence& candidate,
             const std::optional<TokenSequence>& reference = std::nullopt,
             std::string_view context_id = {});

// Built-in reference-based metrics: bleu (segment level, add-one smoothing
// for orders >= 2), rouge1, rouge2, rougeL (F1), rouge1-r, rouge2-r,
// rougeL-r (recall) and token_f1.
std::vector<std::string> builtin_metric_names();
ScorerHandle make_builtin_metric(std::string_view name);

}  // namespace mg
