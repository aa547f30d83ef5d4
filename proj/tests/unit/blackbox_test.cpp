#include "cmi/attack/blackbox.hpp"

#include <gtest/gtest.h>

#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "cmi/common/error.hpp"
#include "cmi/corpus/synthetic.hpp"

namespace cmi::attack {
namespace {

TEST(CasePerturbTest, Examples) {
  EXPECT_EQ(CasePerturb("def Foo(x): return X"),
            std::make_pair(std::string("def foo(x): return x"), std::string("DEF FOO(X): RETURN X")));
  const auto [lo, up] = CasePerturb("123 + _");
  EXPECT_EQ(lo, "123 + _");
  EXPECT_EQ(up, "123 + _");
  // Non-ASCII bytes pass through.
  EXPECT_EQ(CasePerturb("\xc3\xa9" "a").second, "\xc3\xa9" "A");
}

TEST(CasePerturbTest, LowerOfUpperIsLower) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 200; ++i) {
    std::string s(1 + gen() % 30, ' ');
    for (char& c : s) c = static_cast<char>(32 + gen() % 95);
    EXPECT_EQ(CasePerturb(CasePerturb(s).second).first, CasePerturb(s).first);
  }
}

TEST(FormulaTest, HandExamples) {
  const std::vector<float> e1 = {1, 0}, e2 = {0, 1};
  EXPECT_NEAR(UnimodalFormula(e1, e2, e1, e1), std::sqrt(2.0), 1e-12);
  const std::vector<float> o = {0, 0}, a = {0.2f, 0}, b = {0.5f, 0}, c = {0.4f, 0}, d = {1, 0};
  EXPECT_NEAR(UnimodalFormula(o, a, o, b), -0.3, 1e-7);
  EXPECT_NEAR(BimodalFormula(e1, e1, o, c), -0.4, 1e-7);
  EXPECT_EQ(BimodalFormula(e1, e1, e1, e1), 0.0);
  EXPECT_NEAR(BimodalFormula(o, d, e1, e1), 1.0, 1e-12);
  EXPECT_THROW(UnimodalFormula(e1, std::vector<float>{1}, e1, e1), ConfigError);

  CalibratedScore bi{-0.4, ScoreKind::kBimodal};
  EXPECT_DOUBLE_EQ(bi.MemberOriented(), 0.4);
  CalibratedScore uni{0.2, ScoreKind::kUnimodal};
  EXPECT_DOUBLE_EQ(uni.MemberOriented(), 0.2);
}

// Straight-line Euclidean reference.
double Dist(const std::vector<float>& x, const std::vector<float>& y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (double(x[i]) - y[i]) * (double(x[i]) - y[i]);
  return std::sqrt(s);
}

TEST(FormulaTest, MatchesReferenceAndAntiSymmetry) {
  std::mt19937_64 gen(9);
  std::normal_distribution<float> normal;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<float>> v(4, std::vector<float>(16));
    for (auto& x : v)
      for (float& f : x) f = normal(gen);
    const double expect = Dist(v[0], v[1]) - Dist(v[2], v[3]);
    EXPECT_NEAR(UnimodalFormula(v[0], v[1], v[2], v[3]), expect, 1e-6);
    EXPECT_NEAR(BimodalFormula(v[0], v[1], v[2], v[3]), expect, 1e-6);
    EXPECT_EQ(UnimodalFormula(v[2], v[3], v[0], v[1]), -UnimodalFormula(v[0], v[1], v[2], v[3]));
    EXPECT_EQ(BimodalFormula(v[2], v[3], v[0], v[1]), -BimodalFormula(v[0], v[1], v[2], v[3]));
  }
}

class CalibrationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bench_ = corpus::GenerateBenchmark(60, 60, 8);
    tok_.emplace(encoder::Tokenizer::Train(bench_.members.snippets, 320));
    config_.model.num_layers = 2;
    config_.model.hidden_dim = 16;
    config_.model.num_heads = 2;
    config_.model.ff_dim = 32;
    config_.model.max_positions = 40;
    config_.vocab_size = 320;
    config_.training.batch_size = 8;
    config_.training.learning_rate = 1e-3f;
    config_.training.warmup_steps = 10;
    config_.training.layout = encoder::InputLayout::kUnimodal;
    auto tc = config_.model;
    tc.vocab_size = 320;
    target_.emplace(tc, 5);
  }

  corpus::SyntheticBenchmark bench_;
  std::optional<encoder::Tokenizer> tok_;
  CalibrationConfig config_;
  std::optional<encoder::EncoderModel> target_;
};

TEST_F(CalibrationTest, ClsVectorIsRowZeroForEveryAccessLevel) {
  const encoder::Oracle white(encoder::AccessLevel::kWhite, *target_, *tok_);
  const encoder::Oracle black(encoder::AccessLevel::kBlack, *target_, *tok_);
  const auto& s = bench_.members.snippets[0];
  const auto v = ClsVector(black, s.code);
  const auto all = white.EncodeAll(s.code, std::nullopt);
  ASSERT_EQ(v.size(), 16u);
  for (int c = 0; c < 16; ++c) EXPECT_EQ(v[c], all.layer(2)(0, c));
  EXPECT_EQ(ClsVector(white, s.code), v);
  EXPECT_EQ(ClsVector(black, s.code), v);
}

TEST_F(CalibrationTest, IdenticalModelsScoreZero) {
  const encoder::Oracle black(encoder::AccessLevel::kBlack, *target_, *tok_);
  const CalibrationModel same_uni{*tok_, *target_, CalibrationMode::kUnimodal, "copy", {}};
  const CalibrationModel same_bi{*tok_, *target_, CalibrationMode::kBimodal, "copy", {}};
  for (const auto& s : bench_.members.snippets) {
    EXPECT_EQ(UnimodalScore(black, same_uni, s).value, 0.0);
    if (s.nl) EXPECT_EQ(BimodalScore(black, same_bi, s).value, 0.0);
  }
  EXPECT_THROW(UnimodalScore(black, same_bi, bench_.members.snippets[0]), ModeError);
  EXPECT_THROW(BimodalScore(black, same_uni, bench_.members.snippets[0]), ModeError);
  auto bare = bench_.members.snippets[0];
  bare.nl.reset();
  EXPECT_THROW(BimodalScore(black, same_bi, bare), InputError);
}

TEST_F(CalibrationTest, TrainingContracts) {
  EXPECT_THROW(TrainCalibration(bench_.members, CalibrationMode::kUnimodal, config_),
               ContaminationError);
  auto bad = config_;
  bad.training.layout = encoder::InputLayout::kBimodal;
  EXPECT_THROW(TrainCalibration(bench_.nonmembers, CalibrationMode::kUnimodal, bad), ModeError);
  EXPECT_THROW(TrainCalibration(bench_.nonmembers, CalibrationMode::kBimodal, config_), ModeError);

  auto zero = config_;
  zero.training.steps = 0;
  const auto init = TrainCalibration(bench_.nonmembers, CalibrationMode::kUnimodal, zero);
  EXPECT_TRUE(init.loss_trace.empty());
  EXPECT_EQ(init.training_corpus_tag, bench_.nonmembers.tag);
  EXPECT_EQ(init.encoder.config().vocab_size, init.tokenizer.vocab_size());
}

TEST_F(CalibrationTest, LossFallsOverTraining) {
  auto cfg = config_;
  cfg.training.steps = 200;
  const auto model = TrainCalibration(bench_.nonmembers, CalibrationMode::kUnimodal, cfg);
  ASSERT_EQ(model.loss_trace.size(), 200u);
  const auto& tr = model.loss_trace;
  const double head = std::accumulate(tr.begin(), tr.begin() + 20, 0.0) / 20;
  const double tail = std::accumulate(tr.end() - 20, tr.end(), 0.0) / 20;
  EXPECT_LT(tail, head);

  auto bi = cfg;
  bi.training.steps = 2;
  bi.training.layout = encoder::InputLayout::kBimodal;
  EXPECT_EQ(TrainCalibration(bench_.nonmembers, CalibrationMode::kBimodal, bi).mode,
            CalibrationMode::kBimodal);
}

}  // namespace
}  // namespace cmi::attack
