#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cmi/common/error.hpp"
#include "cmi/eval/metrics.hpp"
#include "cmi/eval/report.hpp"

namespace cmi::eval {
namespace {

using corpus::Setting;
constexpr auto kM = MembershipLabel::kMember;
constexpr auto kN = MembershipLabel::kNonmember;

std::vector<ScoredExample> Make(const std::vector<double>& members,
                                const std::vector<double>& nonmembers) {
  std::vector<ScoredExample> out;
  for (std::size_t i = 0; i < members.size(); ++i)
    out.push_back({"m" + std::to_string(i), members[i], kM, std::nullopt});
  for (std::size_t i = 0; i < nonmembers.size(); ++i)
    out.push_back({"n" + std::to_string(i), nonmembers[i], kN, std::nullopt});
  return out;
}

// Quadratic reference: every member/nonmember pair counted directly.
double PairwiseAuc(const std::vector<ScoredExample>& ex) {
  double wins = 0;
  double pairs = 0;
  for (const auto& a : ex) {
    if (a.label != kM) continue;
    for (const auto& b : ex) {
      if (b.label != kN) continue;
      pairs += 1;
      if (a.score > b.score) wins += 1;
      if (a.score == b.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

TEST(AucTest, HandExamples) {
  EXPECT_DOUBLE_EQ(ComputeAuc(Make({0.9, 0.8}, {0.3, 0.2})), 1.0);
  EXPECT_DOUBLE_EQ(ComputeAuc(Make({0.3, 0.2}, {0.9, 0.8})), 0.0);
  EXPECT_DOUBLE_EQ(ComputeAuc(Make({0.9, 0.4}, {0.6, 0.2})), 0.75);
  EXPECT_DOUBLE_EQ(ComputeAuc(Make({0.5}, {0.5})), 0.5);
}

TEST(AucTest, RejectsDegenerateInput) {
  EXPECT_THROW(ComputeAuc(Make({0.1, 0.2}, {})), MetricError);
  EXPECT_THROW(ComputeAuc(Make({}, {0.1})), MetricError);
  EXPECT_THROW(ComputeAuc(Make({NAN}, {0.1})), MetricError);
}

TEST(AucTest, MatchesPairwiseCountingWithTies) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int nm = 1 + static_cast<int>(gen() % 100);
    const int nn = 1 + static_cast<int>(gen() % 100);
    std::vector<double> m(nm), n(nn);
    // Coarse grid so ties are common.
    for (auto& v : m) v = static_cast<double>(gen() % 20) / 10.0;
    for (auto& v : n) v = static_cast<double>(gen() % 15) / 10.0;
    const auto ex = Make(m, n);
    EXPECT_EQ(ComputeAuc(ex), PairwiseAuc(ex)) << "trial " << trial;
  }
}

TEST(AucTest, InvariantUnderMonotoneMapsAndOrder) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(40), n(60);
    for (auto& v : m) v = normal(gen) + 0.5;
    for (auto& v : n) v = normal(gen);
    auto ex = Make(m, n);
    const double base = ComputeAuc(ex);
    auto mapped = ex;
    for (auto& e : mapped) e.score = std::exp(2 * e.score) + 3;
    EXPECT_EQ(ComputeAuc(mapped), base);
    std::shuffle(ex.begin(), ex.end(), gen);
    EXPECT_EQ(ComputeAuc(ex), base);
  }
}

TEST(RocTest, EndpointsAndMonotone) {
  const auto roc = RocCurve(Make({0.9, 0.4}, {0.6, 0.2}));
  ASSERT_GE(roc.size(), 2u);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GE(roc[i].fpr, roc[i - 1].fpr);
    EXPECT_GE(roc[i].tpr, roc[i - 1].tpr);
  }
}

TEST(ThresholdTest, RankFractionExamples) {
  std::vector<double> members;
  for (int i = 10; i >= 1; --i) members.push_back(i / 10.0);
  const auto val = Make(members, {5.0, 6.0});  // nonmembers ignored here
  EXPECT_DOUBLE_EQ(SelectThreshold(val, Setting::kWhitebox, 0.15), 0.9);
  EXPECT_DOUBLE_EQ(SelectThreshold(val, Setting::kGraybox, 1.0), 0.1);
  const auto black = Make({}, {0.5, 0.4, 0.3, 0.2, 0.1});
  EXPECT_DOUBLE_EQ(SelectThreshold(black, Setting::kBlackbox, 0.15, 0.6), 0.3);
}

TEST(ThresholdTest, OrderInvariantAndRejectsEmptySets) {
  std::mt19937_64 gen(2);
  std::vector<double> m(37);
  for (auto& v : m) v = static_cast<double>(gen() % 9);
  auto val = Make(m, {});
  const double theta = SelectThreshold(val, Setting::kWhitebox);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(val.begin(), val.end(), gen);
    EXPECT_EQ(SelectThreshold(val, Setting::kWhitebox), theta);
  }
  // Sort-and-index reference.
  std::sort(m.rbegin(), m.rend());
  EXPECT_EQ(theta, m[static_cast<std::size_t>(std::ceil(0.15 * 37)) - 1]);
  EXPECT_THROW(SelectThreshold(Make({}, {0.1}), Setting::kWhitebox), ConfigError);
  EXPECT_THROW(SelectThreshold(Make({0.1}, {}), Setting::kBlackbox), ConfigError);
}

TEST(ApplyThresholdTest, StrictInequality) {
  auto ex = Make({0.5, 0.5 + 1e-12}, {0.1});
  ApplyThreshold(ex, 0.5);
  EXPECT_EQ(ex[0].predicted, kN);
  EXPECT_EQ(ex[1].predicted, kM);
  EXPECT_EQ(ex[2].predicted, kN);
  EXPECT_THROW(ApplyThreshold(ex, NAN), ConfigError);

  auto low = Make({}, {0.1, 0.2, 0.3});
  ApplyThreshold(low, 0.9);
  EXPECT_EQ(ComputeAccuracies(low).acc_nonmember, 1.0);
}

TEST(AccuracyTest, HandCounts) {
  auto ex = Make({0.9, 0.8, 0.7, 0.1}, {0.2, 0.3, 0.0, 0.25});
  ApplyThreshold(ex, 0.5);
  const auto a = ComputeAccuracies(ex);
  EXPECT_DOUBLE_EQ(a.acc, 0.875);
  EXPECT_DOUBLE_EQ(a.acc_member, 0.75);
  EXPECT_DOUBLE_EQ(a.acc_nonmember, 1.0);

  ApplyThreshold(ex, -1.0);
  const auto all_member = ComputeAccuracies(ex);
  EXPECT_DOUBLE_EQ(all_member.acc, 0.5);
  EXPECT_DOUBLE_EQ(all_member.acc_member, 1.0);
  EXPECT_DOUBLE_EQ(all_member.acc_nonmember, 0.0);

  ApplyThreshold(ex, 0.5);
  ex[3].score = 0.6;
  ApplyThreshold(ex, 0.5);
  const auto perfect = ComputeAccuracies(ex);
  EXPECT_EQ(perfect.acc, 1.0);
  EXPECT_EQ(perfect.acc_member, 1.0);
  EXPECT_EQ(perfect.acc_nonmember, 1.0);
}

TEST(AccuracyTest, ConfusionIdentities) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u;
  std::vector<double> m(23), n(31);
  for (auto& v : m) v = u(gen);
  for (auto& v : n) v = u(gen);
  auto ex = Make(m, n);
  ApplyThreshold(ex, 0.4);
  const auto c = CountConfusion(ex);
  EXPECT_EQ(c.true_positive + c.false_negative, 23u);
  EXPECT_EQ(c.true_negative + c.false_positive, 31u);
  const auto a = ComputeAccuracies(ex);
  EXPECT_NEAR(a.acc, (a.acc_member * 23 + a.acc_nonmember * 31) / 54, 1e-12);
  auto fresh = Make({0.1}, {0.2});
  EXPECT_THROW(CountConfusion(fresh), StateError);
}

TEST(NormalizeTest, RangeAndConstantInput) {
  const std::vector<double> v = {3, 1, 2};
  EXPECT_EQ(MinMaxNormalize(v), (std::vector<double>{1.0, 0.0, 0.5}));
  const std::vector<double> flat = {4, 4, 4};
  EXPECT_EQ(MinMaxNormalize(flat), (std::vector<double>{0, 0, 0}));
}

TEST(IntervalTest, EqualWidthBins) {
  std::vector<double> scores, feature;
  for (int i = 1; i <= 10; ++i) {
    scores.push_back(i);
    feature.push_back(i);
  }
  const auto ex = Make(scores, {});
  const auto rows = IntervalAnalysis(ex, feature, "code_length", 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].upper, 5.5);
  EXPECT_DOUBLE_EQ(rows[1].lower, 5.5);
  EXPECT_EQ(rows[0].count, 5u);
  EXPECT_EQ(rows[1].count, 5u);
  // Normalized scores of 1..5 are 0, 1/9, ..., 4/9.
  EXPECT_NEAR(*rows[0].mean_normalized_score, 2.0 / 9, 1e-12);
  EXPECT_NEAR(*rows[1].mean_normalized_score, 7.0 / 9, 1e-12);
}

TEST(IntervalTest, EmptyBinsAndErrors) {
  const auto ex = Make({0.3, 0.9, 0.5}, {});
  const std::vector<double> feature = {0, 0, 10};
  const auto rows = IntervalAnalysis(ex, feature, "f", 4);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_EQ(rows[1].count, 0u);
  EXPECT_FALSE(rows[1].mean_normalized_score.has_value());
  EXPECT_EQ(rows[3].count, 1u);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.count;
  EXPECT_EQ(total, 3u);
  for (const auto& r : rows)
    if (r.mean_normalized_score) {
      EXPECT_GE(*r.mean_normalized_score, 0.0);
      EXPECT_LE(*r.mean_normalized_score, 1.0);
    }
  EXPECT_THROW(IntervalAnalysis(ex, feature, "f", 1), ConfigError);
  EXPECT_THROW(IntervalAnalysis(ex, std::vector<double>{1, 2}, "f", 2), ConfigError);
}

TEST(ReportTest, BuildsConsistentReport) {
  auto test = Make({0.9, 0.8, 0.7, 0.1}, {0.2, 0.3, 0.0, 0.25});
  const auto val = Make({0.95, 0.6, 0.5, 0.4}, {0.1});
  std::vector<corpus::CodeFeatures> feats;
  for (int i = 0; i < 8; ++i) feats.push_back({10 + i, i % 3, 0.1 * i});
  const auto r = BuildReport("wb", Setting::kWhitebox, test, val, feats);
  EXPECT_EQ(r.n_test, 8u);
  EXPECT_EQ(r.n_member, 4u);
  EXPECT_DOUBLE_EQ(r.threshold, 0.95);
  EXPECT_DOUBLE_EQ(r.auc, ComputeAuc(test));
  EXPECT_NEAR(r.acc, (r.acc_member * 4 + r.acc_nonmember * 4) / 8, 1e-12);
  EXPECT_EQ(r.interval_rows.size(), 15u);
  const auto j = r.ToJson();
  EXPECT_EQ(j["attack"], "wb");
  std::ostringstream csv;
  r.WriteIntervalCsv(csv);
  EXPECT_NE(csv.str().find("code_length"), std::string::npos);
}

}  // namespace
}  // namespace cmi::eval
