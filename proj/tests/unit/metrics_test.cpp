#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "mg/error.hpp"
#include "mg/metrics.hpp"
#include "oracles.hpp"

using mg::RougeVariant;
using mg::TokenSequence;

namespace {

const std::vector<std::string> kAlphabet{"a", "b", "c", "d"};

TokenSequence words(const char* text) { return mg::tokenize(text); }

}  // namespace

TEST(Bleu, MatchesFrozenValue) {
  // Clipped precisions 5/5 and 3/4, candidate shorter by one token.
  const double value = mg::bleu({words("the cat sat on mat")}, {words("the cat sat on the mat")}, 2);
  EXPECT_NEAR(value, 0.70904163102509677359, 1e-15);
}

TEST(Bleu, IdentityIsExactlyOne) {
  const auto t = words("a b c d e f");
  EXPECT_EQ(mg::bleu({t}, {t}), 1.0);
  EXPECT_EQ(mg::sentence_bleu(t, t), 1.0);
  // Shorter than max_order: empty orders are left out.
  EXPECT_EQ(mg::bleu({words("a b")}, {words("a b")}), 1.0);
}

TEST(Bleu, ZeroPrecisionWithoutSmoothingIsZero) {
  EXPECT_EQ(mg::bleu({words("a b c")}, {words("a c b")}, 4), 0.0);
  EXPECT_GT(mg::sentence_bleu(words("a b c"), words("a c b")), 0.0);
}

TEST(Bleu, EmptyCandidateCorpusScoresZero) {
  EXPECT_EQ(mg::bleu({TokenSequence{}}, {words("a")}), 0.0);
  EXPECT_THROW(mg::bleu({}, {}), mg::ValidationError);
  EXPECT_THROW(mg::bleu({words("a")}, {}), mg::ValidationError);
}

TEST(Bleu, MatchesBruteForceOnRandomCorpora) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenSequence> cands, refs;
    const int n = 1 + trial % 3;
    for (int i = 0; i < n; ++i) {
      cands.push_back(testing_support::random_tokens(rng, kAlphabet, 0, 7));
      refs.push_back(testing_support::random_tokens(rng, kAlphabet, 1, 7));
    }
    for (int order = 1; order <= 4; ++order) {
      EXPECT_NEAR(mg::bleu(cands, refs, order),
                  static_cast<double>(oracle::bleu(cands, refs, order, false)), 1e-12);
      EXPECT_NEAR(mg::bleu(cands, refs, order, mg::BleuSmoothing::add_one_high_orders),
                  static_cast<double>(oracle::bleu(cands, refs, order, true)), 1e-12);
    }
  }
}

TEST(Rouge, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = testing_support::random_tokens(rng, kAlphabet, 0, 9);
    const auto r = testing_support::random_tokens(rng, kAlphabet, 0, 9);
    const RougeVariant variants[] = {RougeVariant::recall, RougeVariant::precision, RougeVariant::f1};
    for (int v = 0; v < 3; ++v) {
      for (int n = 1; n <= 3; ++n) {
        EXPECT_NEAR(mg::rouge_n(c, r, n, variants[v]),
                    static_cast<double>(oracle::rouge_n(c, r, n, v)), 1e-12);
      }
      EXPECT_NEAR(mg::rouge_l(c, r, variants[v]), static_cast<double>(oracle::rouge_l(c, r, v)),
                  1e-12);
    }
    EXPECT_EQ(mg::lcs_length(c, r), oracle::lcs(c, r));
    EXPECT_NEAR(mg::token_f1(c, r), static_cast<double>(oracle::token_f1(c, r)), 1e-12);
  }
}

TEST(Rouge, SwapExchangesRecallAndPrecision) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = testing_support::random_tokens(rng, kAlphabet, 1, 8);
    const auto r = testing_support::random_tokens(rng, kAlphabet, 1, 8);
    EXPECT_EQ(mg::rouge_n(c, r, 2, RougeVariant::recall), mg::rouge_n(r, c, 2, RougeVariant::precision));
    EXPECT_EQ(mg::rouge_l(c, r, RougeVariant::recall), mg::rouge_l(r, c, RougeVariant::precision));
    EXPECT_EQ(mg::token_f1(c, r), mg::token_f1(r, c));
  }
}

TEST(Rouge, IdentityAndEmpty) {
  const auto t = words("x y z x");
  EXPECT_EQ(mg::rouge_n(t, t, 1), 1.0);
  EXPECT_EQ(mg::rouge_n(t, t, 2), 1.0);
  EXPECT_EQ(mg::rouge_l(t, t), 1.0);
  EXPECT_EQ(mg::token_f1(t, t), 1.0);
  EXPECT_EQ(mg::rouge_n({}, t, 1), 0.0);
  EXPECT_EQ(mg::rouge_l(t, {}), 0.0);
  EXPECT_EQ(mg::token_f1({}, {}), 0.0);
}

TEST(Rouge, ClipsRepeatedTokens) {
  // "the the the" against "the cat": one clipped match.
  EXPECT_DOUBLE_EQ(mg::rouge_n(words("the the the"), words("the cat"), 1, RougeVariant::precision),
                   1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mg::rouge_n(words("the the the"), words("the cat"), 1, RougeVariant::recall), 0.5);
}

TEST(NgramProfile, CountsAndTotals) {
  const auto p = mg::NgramProfile::of(words("a b a b"), 2);
  EXPECT_EQ(p.total(), 3);
  EXPECT_EQ(p.counts.at(TokenSequence{"a", "b"}), 2);
  EXPECT_EQ(mg::NgramProfile::of(words("a"), 2).total(), 0);
  EXPECT_THROW(mg::NgramProfile::of(words("a"), 0), mg::ValidationError);
}
