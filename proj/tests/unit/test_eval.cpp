#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdmae/error.hpp"
#include "sdmae/eval.hpp"
#include "sdmae/rng.hpp"

using namespace sdmae;

namespace {

LabelledSeries make(const std::string& id, std::vector<double> scores, std::vector<int> labels) {
  LabelledSeries ls;
  ls.series.video_id = id;
  ls.series.raw = scores;
  ls.series.smoothed = std::move(scores);
  ls.labels = std::move(labels);
  return ls;
}

}  // namespace

TEST(Auc, HandExamples) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
}

TEST(Auc, MatchesPairwiseOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng.below(trial < 100 ? 60 : 999);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool ties = rng.bernoulli(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ties ? static_cast<double>(rng.below(5)) : rng.uniform();
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    ASSERT_NEAR(roc_auc(s, y), oracle::pairwise_auc(s, y), 1e-12);
  }
}

TEST(Auc, InvariantToMonotoneMaps) {
  Rng rng(2);
  std::vector<double> s(200), t(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform(-2, 2);
    t[i] = std::exp(3 * s[i]) + 7;
    y[i] = rng.bernoulli(0.4);
  }
  y[0] = 0;
  y[1] = 1;
  EXPECT_NEAR(roc_auc(s, y), roc_auc(t, y), 1e-12);
  for (double& v : s) v = -v;
  EXPECT_NEAR(roc_auc(s, y), 1.0 - roc_auc(t, y), 1e-12);
}

TEST(Auc, Errors) {
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1}), ShapeError);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), DataError);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{0, 2}), DataError);
}

TEST(Evaluate, SingleVideoMicroEqualsMacro) {
  const std::vector<LabelledSeries> v{make("a", {0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})};
  const EvalResult r = evaluate(v);
  EXPECT_DOUBLE_EQ(r.micro_auc, 0.75);
  EXPECT_DOUBLE_EQ(r.macro_auc, 0.75);
  EXPECT_EQ(r.frames, 4u);
}

TEST(Evaluate, MicroAndMacroDisagreeOnCraftedPair) {
  // each video alone is perfectly ranked, but video b sits lower overall
  const std::vector<LabelledSeries> v{make("a", {0.5, 0.6, 0.9, 1.0}, {0, 0, 1, 1}),
                                      make("b", {0.1, 0.2, 0.3, 0.4}, {0, 0, 1, 1})};
  const EvalResult r = evaluate(v);
  EXPECT_DOUBLE_EQ(r.macro_auc, 1.0);
  std::vector<double> s{0.5, 0.6, 0.9, 1.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<int> y{0, 0, 1, 1, 0, 0, 1, 1};
  EXPECT_NEAR(r.micro_auc, oracle::pairwise_auc(s, y), 1e-12);
  EXPECT_NEAR(r.micro_auc, 0.75, 1e-12);
}

TEST(Evaluate, SingleClassVideoSkippedFromMacro) {
  const std::vector<LabelledSeries> v{make("a", {0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}),
                                      make("quiet", {0.2, 0.3}, {0, 0})};
  const EvalResult r = evaluate(v);
  EXPECT_DOUBLE_EQ(r.macro_auc, 0.75);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], "quiet");
  EXPECT_EQ(r.frames, 6u);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(std::vector<LabelledSeries>{}), DataError);
  const std::vector<LabelledSeries> bad{make("short", {0.1, 0.2, 0.3}, {0, 1})};
  try {
    evaluate(bad);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("short"), std::string::npos);
  }
}

TEST(Evaluate, KeyValueRoundTrip) {
  const std::vector<LabelledSeries> v{make("a", {0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}),
                                      make("b", {0.3, 0.2, 0.9}, {0, 1, 1}), make("c", {1, 2}, {1, 1})};
  const EvalResult r = evaluate(v);
  const EvalResult back = parse_key_values(format_key_values(r));
  EXPECT_EQ(back.micro_auc, r.micro_auc);
  EXPECT_EQ(back.macro_auc, r.macro_auc);
  EXPECT_EQ(back.per_video_auc, r.per_video_auc);
  EXPECT_EQ(back.skipped, r.skipped);
  EXPECT_EQ(back.frames, r.frames);
  EXPECT_NE(format_report(r).find("micro"), std::string::npos);
}

TEST(Evaluate, MacroFallsBackToMicroWithoutTwoClassVideos) {
  const std::vector<LabelledSeries> v{make("calm", {0.1, 0.2}, {0, 0}), make("busy", {0.9, 0.15}, {1, 1})};
  const EvalResult r = evaluate(v);
  EXPECT_DOUBLE_EQ(r.micro_auc, 0.75);
  EXPECT_DOUBLE_EQ(r.macro_auc, r.micro_auc);
  EXPECT_TRUE(r.counted.empty());
  EXPECT_NE(format_report(r).find("equals micro"), std::string::npos);
}
