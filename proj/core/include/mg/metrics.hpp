#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mg/text.hpp"

namespace mg {

// Multiset of the order-n n-grams of a token sequence.
struct NgramProfile {
  int order = 1;
  std::map<TokenSequence, std::int64_t> counts;

  static NgramProfile of(const TokenSequence& tokens, int order);

  // Number of n-gram occurrences, max(0, len - n + 1) for the source sequence.
  std::int64_t total() const;

  // Sum over n-grams of min(count here, count in other).
  std::int64_t clipped_overlap(const NgramProfile& other) const;
};

enum class BleuSmoothing {
  none,
  // (matches + 1) / (total + 1) for orders >= 2.
  add_one_high_orders,
};

// Corpus BLEU: brevity penalty times the geometric mean of clipped n-gram
// precisions for n = 1..max_order, statistics summed over the corpus.
// Orders for which the candidate corpus has no n-grams at all are left out
// of the mean, so a short candidate identical to its reference still
// scores 1. An empty candidate corpus scores 0.
double bleu(const std::vector<TokenSequence>& candidates,
            const std::vector<TokenSequence>& references, int max_order = 4,
            BleuSmoothing smoothing = BleuSmoothing::none);

// Single pair, add-one smoothing on orders >= 2.
double sentence_bleu(const TokenSequence& candidate, const TokenSequence& reference,
                     int max_order = 4);

enum class RougeVariant { recall, precision, f1 };

double rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n,
               RougeVariant variant = RougeVariant::f1);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

double rouge_l(const TokenSequence& candidate, const TokenSequence& reference,
               RougeVariant variant = RougeVariant::f1);

// F1 over the clipped unigram multiset overlap.
double token_f1(const TokenSequence& candidate, const TokenSequence& reference);

}  // namespace mg
