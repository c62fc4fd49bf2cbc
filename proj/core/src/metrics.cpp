#include "mg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "mg/error.hpp"

namespace mg {
namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double combine(double recall, double precision, RougeVariant variant) {
  switch (variant) {
    case RougeVariant::recall:
      return recall;
    case RougeVariant::precision:
      return precision;
    case RougeVariant::f1:
      if (recall + precision == 0.0) return 0.0;
      return 2.0 * recall * precision / (recall + precision);
  }
  return 0.0;
}

using Gram = std::span<const std::string>;

std::vector<Gram> sorted_grams(const TokenSequence& tokens, std::size_t n) {
  std::vector<Gram> grams;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) grams.emplace_back(tokens.data() + i, n);
  std::sort(grams.begin(), grams.end(), [](Gram a, Gram b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  return grams;
}

int compare(Gram a, Gram b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (const int c = a[i].compare(b[i]); c != 0) return c;
  }
  return 0;
}

// Clipped n-gram matches: a merge over both sorted n-gram lists, so every
// candidate occurrence pairs with at most one reference occurrence.
std::int64_t clipped_matches(const TokenSequence& candidate, const TokenSequence& reference,
                             std::size_t n) {
  const auto cand = sorted_grams(candidate, n);
  const auto ref = sorted_grams(reference, n);
  std::int64_t matches = 0;
  for (std::size_t i = 0, j = 0; i < cand.size() && j < ref.size();) {
    const int c = compare(cand[i], ref[j]);
    if (c == 0) {
      ++matches;
      ++i;
      ++j;
    } else if (c < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  return matches;
}

std::int64_t gram_count(const TokenSequence& tokens, std::size_t n) {
  return tokens.size() >= n ? static_cast<std::int64_t>(tokens.size() - n + 1) : 0;
}

}  // namespace

NgramProfile NgramProfile::of(const TokenSequence& tokens, int order) {
  if (order < 1) throw ValidationError("n-gram order must be >= 1");
  NgramProfile profile;
  profile.order = order;
  const auto n = static_cast<std::size_t>(order);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++profile.counts[TokenSequence(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return profile;
}

std::int64_t NgramProfile::total() const {
  std::int64_t sum = 0;
  for (const auto& [gram, count] : counts) sum += count;
  return sum;
}

std::int64_t NgramProfile::clipped_overlap(const NgramProfile& other) const {
  std::int64_t overlap = 0;
  for (const auto& [gram, count] : counts) {
    const auto it = other.counts.find(gram);
    if (it != other.counts.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

double bleu(const std::vector<TokenSequence>& candidates,
            const std::vector<TokenSequence>& references, int max_order,
            BleuSmoothing smoothing) {
  if (candidates.empty()) throw ValidationError("bleu: empty candidate list");
  if (candidates.size() != references.size()) {
    throw ValidationError("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                          std::to_string(references.size()) + " references");
  }
  if (max_order < 1) throw ValidationError("bleu: max_order must be >= 1");

  std::vector<std::int64_t> matches(static_cast<std::size_t>(max_order), 0);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(max_order), 0);
  std::int64_t cand_len = 0;
  std::int64_t ref_len = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    cand_len += static_cast<std::int64_t>(candidates[s].size());
    ref_len += static_cast<std::int64_t>(references[s].size());
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_order); ++n) {
      matches[n - 1] += clipped_matches(candidates[s], references[s], n);
      totals[n - 1] += gram_count(candidates[s], n);
    }
  }
  if (cand_len == 0) return 0.0;

  double log_sum = 0.0;
  int used_orders = 0;
  for (int n = 1; n <= max_order; ++n) {
    const auto m = matches[static_cast<std::size_t>(n - 1)];
    const auto t = totals[static_cast<std::size_t>(n - 1)];
    if (t == 0) continue;
    double precision = 0.0;
    if (smoothing == BleuSmoothing::add_one_high_orders && n >= 2) {
      precision = static_cast<double>(m + 1) / static_cast<double>(t + 1);
    } else {
      precision = ratio(m, t);
    }
    if (precision == 0.0) return 0.0;
    log_sum += std::log(precision);
    ++used_orders;
  }
  const double brevity =
      cand_len < ref_len
          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len))
          : 1.0;
  return brevity * std::exp(log_sum / used_orders);
}

double sentence_bleu(const TokenSequence& candidate, const TokenSequence& reference,
                     int max_order) {
  return bleu({candidate}, {reference}, max_order, BleuSmoothing::add_one_high_orders);
}

double rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n,
               RougeVariant variant) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  const auto order = static_cast<std::size_t>(n);
  const auto overlap = clipped_matches(candidate, reference, order);
  return combine(ratio(overlap, gram_count(reference, order)), ratio(overlap, gram_count(candidate, order)),
                 variant);
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& candidate, const TokenSequence& reference,
               RougeVariant variant) {
  const auto lcs = static_cast<std::int64_t>(lcs_length(candidate, reference));
  return combine(ratio(lcs, static_cast<std::int64_t>(reference.size())),
                 ratio(lcs, static_cast<std::int64_t>(candidate.size())), variant);
}

double token_f1(const TokenSequence& candidate, const TokenSequence& reference) {
  return rouge_n(candidate, reference, 1, RougeVariant::f1);
}

}  // namespace mg
