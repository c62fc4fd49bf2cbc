#include "mg/scorer.hpp"

#include <cmath>
#include <functional>
#include <utility>

#include "mg/error.hpp"
#include "mg/metrics.hpp"

namespace mg {
namespace {

using MetricFn = std::function<double(const TokenSequence&, const TokenSequence&)>;

class MetricScorer final : public Scorer {
 public:
  MetricScorer(std::string name, MetricFn fn) : fn_(std::move(fn)) {
    info_.name = std::move(name);
    info_.kind = ScorerKind::reference_based;
    info_.backend = ScorerBackend::native_metric;
    info_.deterministic = true;
  }

  const ScorerInfo& info() const override { return info_; }

  double evaluate(const TokenSequence&, const TokenSequence& candidate,
                  const TokenSequence* reference, std::string_view) const override {
    return fn_(candidate, *reference);
  }

 private:
  ScorerInfo info_;
  MetricFn fn_;
};

struct BuiltinMetric {
  std::string_view name;
  MetricFn fn;
};

const std::vector<BuiltinMetric>& builtin_metrics() {
  static const std::vector<BuiltinMetric> metrics = {
      {"bleu", [](const auto& c, const auto& r) { return sentence_bleu(c, r); }},
      {"rouge1", [](const auto& c, const auto& r) { return rouge_n(c, r, 1); }},
      {"rouge2", [](const auto& c, const auto& r) { return rouge_n(c, r, 2); }},
      {"rougeL", [](const auto& c, const auto& r) { return rouge_l(c, r); }},
      {"rouge1-r", [](const auto& c, const auto& r) { return rouge_n(c, r, 1, RougeVariant::recall); }},
      {"rouge2-r", [](const auto& c, const auto& r) { return rouge_n(c, r, 2, RougeVariant::recall); }},
      {"rougeL-r", [](const auto& c, const auto& r) { return rouge_l(c, r, RougeVariant::recall); }},
      {"token_f1", [](const auto& c, const auto& r) { return token_f1(c, r); }},
  };
  return metrics;
}

}  // namespace

std::string_view to_string(ScorerKind kind) {
  return kind == ScorerKind::reference_free ? "reference_free" : "reference_based";
}

std::string_view to_string(ScorerBackend backend) {
  switch (backend) {
    case ScorerBackend::native_metric:
      return "native_metric";
    case ScorerBackend::native_condlm:
      return "native_condlm";
    case ScorerBackend::external_bridge:
      return "external_bridge";
  }
  return "unknown";
}

double score(const Scorer& scorer, const TokenSequence& source, const TokenSequence& candidate,
             const std::optional<TokenSequence>& reference, std::string_view context_id) {
  const auto& info = scorer.info();
  const TokenSequence* ref = nullptr;
  if (info.kind == ScorerKind::reference_based) {
    if (!reference) {
      std::string msg = "scorer '" + info.name + "' is reference-based but no reference was given";
      if (!context_id.empty()) msg += " (segment " + std::string(context_id) + ")";
      throw ValidationError(msg);
    }
    ref = &*reference;
  }
  const double value = scorer.evaluate(source, candidate, ref, context_id);
  if (!std::isfinite(value)) {
    throw Error("scorer '" + info.name + "' returned a non-finite score" +
                (context_id.empty() ? std::string() : " for segment " + std::string(context_id)));
  }
  return value;
}

std::vector<std::string> builtin_metric_names() {
  std::vector<std::string> names;
  for (const auto& metric : builtin_metrics()) names.emplace_back(metric.name);
  return names;
}

ScorerHandle make_builtin_metric(std::string_view name) {
  for (const auto& metric : builtin_metrics()) {
    if (metric.name == name) return std::make_shared<MetricScorer>(std::string(name), metric.fn);
  }
  throw ValidationError("unknown scorer '" + std::string(name) + "'");
}

}  // namespace mg
