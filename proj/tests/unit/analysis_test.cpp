#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "mg/analysis.hpp"
#include "mg/error.hpp"
#include "oracles.hpp"

using testing_support::LambdaScorer;

namespace {

std::vector<mg::Segment> segments(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  std::vector<mg::Segment> out;
  int i = 0;
  for (const auto& [src, ref] : pairs) {
    mg::Segment s;
    s.id = "s" + std::to_string(i++);
    s.source = src;
    if (ref != nullptr) s.reference = std::string(ref);
    out.push_back(s);
  }
  return out;
}

double length(const mg::TokenSequence&, const mg::TokenSequence& c) { return static_cast<double>(c.size()); }

}  // namespace

TEST(Pearson, FrozenValueAndOracle) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 3, 2, 4};
  EXPECT_NEAR(mg::pearson(x, y), 0.8, 1e-15);

  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 9;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = 0.5 * a[i] + normal(rng);
    }
    EXPECT_NEAR(mg::pearson(a, b), static_cast<double>(oracle::pearson(a, b)), 1e-9);
  }
}

TEST(Pearson, AffineInvarianceAndBounds) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(6), b(6), a2(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const double scale = 0.1 + std::abs(u(rng));
    const double shift = u(rng);
    for (int i = 0; i < 6; ++i) a2[i] = scale * a[i] + shift;
    const double r = mg::pearson(a, b);
    EXPECT_NEAR(mg::pearson(a2, b), r, 1e-9);
    EXPECT_NEAR(mg::pearson(b, a), r, 1e-12);
    for (auto& v : a2) v = -v;
    EXPECT_NEAR(mg::pearson(a2, b), -r, 1e-9);
    EXPECT_LE(std::abs(r), 1.0);
    EXPECT_EQ(mg::pearson(a, a), 1.0);
  }
}

TEST(Pearson, RejectsDegenerateInputs) {
  const std::vector<double> flat{2, 2, 2};
  const std::vector<double> x{1, 2, 3};
  EXPECT_THROW(mg::pearson(flat, x), mg::ValidationError);
  EXPECT_THROW(mg::pearson(std::vector<double>{1}, std::vector<double>{1}), mg::ValidationError);
  EXPECT_THROW(mg::pearson(x, std::vector<double>{1, 2}), mg::ValidationError);
}

TEST(SystemScores, UnweightedMeanWithReferenceLast) {
  LambdaScorer scorer("len", length);
  const auto segs = segments({{"x", "a b c d"}, {"y", "a"}});
  const mg::OutputsBySystem outputs{
      {"zeta", {{"s0", "a"}, {"s1", "a b c"}}},
      {"alpha", {{"s0", "a b"}, {"s1", "a b"}}},
  };
  const auto table = mg::system_scores(scorer, segs, outputs, true);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.systems(), (std::vector<std::string>{"alpha", "zeta", "REFERENCE"}));
  EXPECT_EQ(table.rows[0].corpus_score, 2.0);
  EXPECT_EQ(table.rows[1].corpus_score, 2.0);
  EXPECT_EQ(table.rows[2].corpus_score, 2.5);
  EXPECT_EQ(table.rows[2].n_segments, 2u);
  EXPECT_EQ(table.metric_name, "len");
  EXPECT_EQ(table.find("nobody"), nullptr);
}

TEST(SystemScores, ReferenceBasedMetricUsesReferences) {
  const auto segs = segments({{"x", "a b"}, {"y", "c"}});
  const mg::OutputsBySystem outputs{{"sys", {{"s0", "a b"}, {"s1", "d"}}}};
  const auto table = mg::system_scores(*mg::make_builtin_metric("token_f1"), segs, outputs, false);
  EXPECT_EQ(table.rows[0].corpus_score, 0.5);
  EXPECT_THROW(mg::system_scores(*mg::make_builtin_metric("token_f1"), segs, outputs, true),
               mg::ValidationError);
}

TEST(SystemScores, CoverageIsChecked) {
  LambdaScorer scorer("len", length);
  const auto segs = segments({{"x", "a"}, {"y", "b"}});
  EXPECT_THROW(mg::system_scores(scorer, segs, {{"sys", {{"s0", "a"}}}}, false), mg::ValidationError);
  EXPECT_THROW(mg::system_scores(scorer, segs, {{"sys", {{"s0", "a"}, {"s1", "b"}, {"s9", "c"}}}}, false),
               mg::ValidationError);
  EXPECT_THROW(mg::system_scores(scorer, segs, {{"REFERENCE", {{"s0", "a"}, {"s1", "b"}}}}, false),
               mg::ValidationError);
  const auto noref = segments({{"x", nullptr}});
  EXPECT_THROW(mg::system_scores(scorer, noref, {{"sys", {{"s0", "a"}}}}, true), mg::ValidationError);
}

TEST(SystemScores, ParallelScoringMatchesSerial) {
  LambdaScorer scorer("len", length);
  std::vector<mg::Segment> segs;
  mg::OutputsBySystem outputs;
  for (int i = 0; i < 40; ++i) {
    mg::Segment s;
    s.id = "s" + std::to_string(i);
    s.source = "x";
    s.reference = std::string(i % 5 + 1, 'r');
    segs.push_back(s);
    for (int k = 0; k < 3; ++k) outputs["sys" + std::to_string(k)][s.id] = std::string(i % (k + 2) + 1, 'a') + " b";
  }
  const auto serial = mg::system_scores(scorer, segs, outputs, true, {{}, 1});
  const auto parallel = mg::system_scores(scorer, segs, outputs, true, {{}, 4});
  EXPECT_EQ(serial, parallel);
}

TEST(GroupOutputs, RejectsDuplicates) {
  EXPECT_THROW(mg::group_outputs({{"s0", "a", "x"}, {"s0", "a", "y"}}), mg::ValidationError);
  const auto grouped = mg::group_outputs({{"s0", "a", "x"}, {"s0", "b", "y"}});
  EXPECT_EQ(grouped.at("b").at("s0"), "y");
}

TEST(Correlate, PairsBySystemName) {
  mg::SystemScoreTable a{"m1", {{"x", 1, 5}, {"y", 2, 5}, {"z", 3, 5}, {"w", 4, 5}}};
  mg::SystemScoreTable b{"m2", {{"w", 4, 5}, {"z", 2, 5}, {"y", 3, 5}, {"x", 1, 5}}};
  const auto report = mg::correlate(a, b);
  EXPECT_NEAR(report.pearson_r, 0.8, 1e-15);
  EXPECT_EQ(report.n, 4u);
  EXPECT_EQ(report.metric_a, "m1");
  EXPECT_EQ(report.systems, (std::vector<std::string>{"x", "y", "z", "w"}));
}

TEST(Correlate, RejectsMismatchedTables) {
  mg::SystemScoreTable a{"m1", {{"x", 1, 5}, {"y", 2, 5}}};
  mg::SystemScoreTable b{"m2", {{"x", 1, 5}, {"q", 2, 5}}};
  EXPECT_THROW(mg::correlate(a, b), mg::ValidationError);
  mg::SystemScoreTable c{"m3", {{"x", 1, 5}, {"y", 2, 4}}};
  EXPECT_THROW(mg::correlate(a, c), mg::ValidationError);
}

TEST(BiasReport, RanksReferenceAmongSystems) {
  LambdaScorer scorer("len", length);
  const auto segs = segments({{"x", "a b c"}, {"y", "a b c"}});
  const mg::OutputsBySystem outputs{
      {"long", {{"s0", "a b c d"}, {"s1", "a b c d e"}}},
      {"short", {{"s0", "a"}, {"s1", "a"}}},
      {"same", {{"s0", "p q r"}, {"s1", "p q r"}}},
  };
  const auto report = mg::bias_report(scorer, segs, outputs);
  EXPECT_EQ(report.table.systems(), (std::vector<std::string>{"long", "REFERENCE", "same", "short"}));
  EXPECT_EQ(report.reference_rank, 2u);
  EXPECT_EQ(report.above_reference, (std::vector<std::string>{"long"}));
  EXPECT_THROW(mg::bias_report(*mg::make_builtin_metric("rouge1"), segs, outputs), mg::ValidationError);
}

TEST(RankSystems, HighestFirstTiesByName) {
  mg::SystemScoreTable t{"m", {{"b", 1, 1}, {"a", 1, 1}, {"c", 3, 1}}};
  const auto ranks = mg::rank_systems(t);
  EXPECT_EQ(ranks.at("c"), 1);
  EXPECT_EQ(ranks.at("a"), 2);
  EXPECT_EQ(ranks.at("b"), 3);
}

TEST(TwoAxis, KeepsTableAOrder) {
  mg::SystemScoreTable a{"m1", {{"x", 1, 1}, {"y", 2, 1}}};
  mg::SystemScoreTable b{"m2", {{"y", 0.1, 1}, {"x", 0.9, 1}}};
  const auto rows = mg::two_axis_ranking(a, b);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].system, "x");
  EXPECT_EQ(rows[0].rank_a, 2);
  EXPECT_EQ(rows[0].rank_b, 1);
  EXPECT_EQ(rows[1].score_b, 0.1);
  mg::SystemScoreTable c{"m3", {{"x", 1, 1}}};
  EXPECT_THROW(mg::two_axis_ranking(a, c), mg::ValidationError);
}

TEST(PseudoReference, DirectDecodeOnToyData) {
  std::mt19937_64 rng(43);
  auto model = std::make_shared<const mg::CondLmModel>(testing_support::random_toy_model(rng, 3, 2));
  const auto free = mg::make_condlm_scorer(model);
  const auto based = mg::make_builtin_metric("token_f1");
  const auto segs = segments({{"a b", "a b"}, {"c", "c"}, {"b c", "b"}});
  const mg::OutputsBySystem outputs{
      {"one", {{"s0", "a"}, {"s1", "c"}, {"s2", "b"}}},
      {"two", {{"s0", "c c c"}, {"s1", "a a"}, {"s2", "a"}}},
      {"three", {{"s0", "b"}, {"s1", "b c"}, {"s2", "c c"}}},
  };
  mg::OptimizeRequest request;
  request.model = model;
  request.decode = {4, 4};
  const auto result = mg::pseudo_reference_eval(free, based, segs, outputs, request);
  ASSERT_EQ(result.pseudo_references.size(), 3u);
  EXPECT_EQ(result.correlation.n, 3u);
  EXPECT_EQ(result.ref_free, mg::system_scores(*free, segs, outputs, false));
  auto pseudo = segs;
  for (std::size_t i = 0; i < pseudo.size(); ++i) pseudo[i].reference = result.pseudo_references[i].output->text;
  EXPECT_EQ(result.ref_based, mg::system_scores(*based, pseudo, outputs, false));

  EXPECT_THROW(mg::pseudo_reference_eval(free, based, segs, {{"one", outputs.at("one")}}, request),
               mg::ValidationError);
  EXPECT_THROW(mg::pseudo_reference_eval(based, based, segs, outputs, request), mg::ValidationError);
}
