#include "cmi/attack/whitebox.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/corpus/synthetic.hpp"
#include "cmi/encoder/oracle.hpp"
#include "cmi/eval/metrics.hpp"

namespace cmi::attack {
namespace {

using corpus::LabeledSnippet;
using corpus::MembershipLabel;

InferenceConfig SmallInference(int steps) {
  InferenceConfig c;
  c.model_dim = 16;
  c.num_heads = 2;
  c.ff_dim = 32;
  c.steps = steps;
  c.batch_size = 32;
  return c;
}

// Members sit at +e1 and nonmembers at -e1, with small per-snippet noise
// derived from the id.
std::vector<LabeledSnippet> SeparableSet(int per_class) {
  std::vector<LabeledSnippet> set;
  for (int i = 0; i < 2 * per_class; ++i) {
    const auto label = i % 2 ? MembershipLabel::kMember : MembershipLabel::kNonmember;
    set.push_back({{"x" + std::to_string(i), i % 2 ? "+" : "-", std::nullopt,
                    corpus::Language::kPython, "fixture"},
                   label});
  }
  return set;
}

Matrix SeparableFeatures(const corpus::CodeSnippet& s) {
  Rng rng(DeriveSeed(1, s.id));
  Matrix m(5, 8);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m(r, c) = static_cast<float>(0.1 * (Uniform01(rng) - 0.5));
  for (int r = 0; r < m.rows; ++r) m(r, 0) += s.code == "+" ? 1.0f : -1.0f;
  return m;
}

// Pure noise: the label is not recoverable from the features.
Matrix NoiseFeatures(const corpus::CodeSnippet& s) {
  Rng rng(DeriveSeed(2, s.id));
  Matrix m(5, 8);
  for (float& v : m.data) v = static_cast<float>(Uniform01(rng) - 0.5);
  return m;
}

double SetAuc(std::span<const LabeledSnippet> set, const std::vector<double>& scores) {
  std::vector<eval::ScoredExample> ex;
  for (std::size_t i = 0; i < set.size(); ++i)
    ex.push_back({set[i].snippet.id, scores[i], set[i].label, std::nullopt});
  return eval::ComputeAuc(ex);
}

TEST(LayerSelectionTest, Contracts) {
  EXPECT_EQ(LayerSelection::Default(4).layers(), (std::vector<int>{2, 4}));
  EXPECT_EQ(LayerSelection::Default(5).layers(), (std::vector<int>{3, 5}));
  EXPECT_EQ(LayerSelection::Default(1).layers(), (std::vector<int>{1}));
  EXPECT_EQ(LayerSelection::Parse("2+4"), LayerSelection({2, 4}));
  EXPECT_EQ(LayerSelection::Parse("4").ToString(), "4");
  EXPECT_EQ(LayerSelection({2, 4}).ToString(), "2+4");
  EXPECT_THROW(LayerSelection({2, 1}), ConfigError);
  EXPECT_THROW(LayerSelection({2, 2}), ConfigError);
  EXPECT_THROW(LayerSelection({1, 2, 3}), ConfigError);
  EXPECT_THROW(LayerSelection({0}), ConfigError);
  EXPECT_THROW(LayerSelection::Parse("a+b"), ConfigError);
  EXPECT_THROW(LayerSelection({2, 5}).CheckAgainst(4), ConfigError);
}

encoder::EncodingResult FakeResult(int layers, int len, int d) {
  encoder::EncodingResult r;
  float v = 0;
  for (int l = 0; l < layers; ++l) {
    Matrix m(len, d);
    for (float& x : m.data) x = v++;
    r.layer_outputs.push_back(std::move(m));
  }
  return r;
}

TEST(StackTest, ShapesAndLosslessConcatenation) {
  const auto r = FakeResult(4, 7, 64);
  const auto stack = StackLayerOutputs(r, LayerSelection({2, 4}));
  ASSERT_EQ(stack.size(), 2u);
  EXPECT_EQ(stack[0].data, r.layer(2).data);
  EXPECT_EQ(stack[1].data, r.layer(4).data);
  const Matrix flat = FlattenStack(stack);
  EXPECT_EQ(flat.rows, 7);
  EXPECT_EQ(flat.cols, 128);
  for (int t = 0; t < 7; ++t)
    for (int c = 0; c < 64; ++c) {
      EXPECT_EQ(flat(t, c), r.layer(2)(t, c));
      EXPECT_EQ(flat(t, 64 + c), r.layer(4)(t, c));
    }
  // Entries are all distinct, so equal sorted contents mean nothing was lost.
  std::vector<float> in = r.layer(2).data;
  in.insert(in.end(), r.layer(4).data.begin(), r.layer(4).data.end());
  std::vector<float> out = flat.data;
  std::sort(in.begin(), in.end());
  std::sort(out.begin(), out.end());
  EXPECT_EQ(in, out);

  EXPECT_EQ(FlattenStack(StackLayerOutputs(r, LayerSelection({4}))).data, r.layer(4).data);
  EXPECT_THROW(StackLayerOutputs(FakeResult(1, 7, 8), LayerSelection({1, 2})), AccessViolation);
}

TEST(ClassifierTest, SeparableFixtureReachesPerfectAuc) {
  const auto set = SeparableSet(50);
  const auto trained = TrainClassifier(set, SeparableFeatures, 8, SmallInference(60));
  EXPECT_EQ(trained.loss_trace.size(), 60u);
  EXPECT_LT(trained.loss_trace.back(), trained.loss_trace.front());
  const auto scores = ScoreSet(trained.model, set, SeparableFeatures);
  EXPECT_EQ(SetAuc(set, scores), 1.0);
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i].label == MembershipLabel::kMember) EXPECT_GT(scores[i], 0.5);

  // Training order does not matter for the converged result.
  auto shuffled = set;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
  const auto again = TrainClassifier(shuffled, SeparableFeatures, 8, SmallInference(60));
  EXPECT_NEAR(SetAuc(set, ScoreSet(again.model, set, SeparableFeatures)), 1.0, 0.02);

  // Same seed, same model.
  EXPECT_EQ(TrainClassifier(set, SeparableFeatures, 8, SmallInference(60)).model, trained.model);
}

TEST(ClassifierTest, UntrainedModelIsNearChance) {
  const auto set = SeparableSet(200);
  const auto trained = TrainClassifier(set, NoiseFeatures, 8, SmallInference(0));
  EXPECT_TRUE(trained.loss_trace.empty());
  EXPECT_NEAR(SetAuc(set, ScoreSet(trained.model, set, NoiseFeatures)), 0.5, 0.1);
}

TEST(ClassifierTest, ScoresStayInsideOpenUnitInterval) {
  InferenceModel model(8, SmallInference(0));
  std::mt19937_64 gen(4);
  std::normal_distribution<float> normal(0.0f, 50.0f);
  for (int i = 0; i < 1000; ++i) {
    Matrix m(1 + static_cast<int>(gen() % 6), 8);
    for (float& v : m.data) v = normal(gen);
    const double s = model.Score(m);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_THROW(model.Score(Matrix(3, 9)), ConfigError);
}

TEST(ClassifierTest, SaveLoadRoundTrip) {
  const InferenceModel model(8, SmallInference(0));
  const auto path = std::filesystem::temp_directory_path() / "cmi_inference_test.bin";
  model.Save(path);
  EXPECT_EQ(InferenceModel::Load(path), model);
  std::filesystem::remove(path);
}

class WhiteboxOracleTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bench_ = corpus::GenerateBenchmark(120, 120, 9);
    tok_.emplace(encoder::Tokenizer::Train(bench_.members.snippets, 350));
    encoder::EncoderConfig c;
    c.vocab_size = 350;
    c.num_layers = 4;
    c.hidden_dim = 16;
    c.num_heads = 2;
    c.ff_dim = 32;
    c.max_positions = 48;
    model_.emplace(c, 1);
    bundle_ = corpus::BuildSplits(bench_.members.snippets, bench_.nonmembers.snippets,
                                  corpus::Setting::kWhitebox, 0.7, {20, 20, 5}, 3);
  }

  corpus::SyntheticBenchmark bench_;
  std::optional<encoder::Tokenizer> tok_;
  std::optional<encoder::EncoderModel> model_;
  corpus::SplitBundle bundle_;
};

TEST_F(WhiteboxOracleTest, FeaturesConcatenateSelectedLayers) {
  const encoder::Oracle white(encoder::AccessLevel::kWhite, *model_, *tok_);
  const auto& s = bench_.members.snippets[0];
  const Matrix f = WhiteboxFeatures(white, s, LayerSelection({2, 4}));
  // Attacks see the code alone.
  const auto all = white.EncodeAll(s.code, std::nullopt);
  EXPECT_EQ(f.cols, 32);
  EXPECT_EQ(f.rows, all.layer(4).rows);
  EXPECT_EQ(f(0, 0), all.layer(2)(0, 0));
  EXPECT_EQ(f(0, 16), all.layer(4)(0, 0));
}

TEST_F(WhiteboxOracleTest, TrainsAndScoresDeterministically) {
  const encoder::Oracle white(encoder::AccessLevel::kWhite, *model_, *tok_);
  const LayerSelection sel({2, 4});
  const auto trained = TrainWhitebox(bundle_, white, sel, SmallInference(10));
  EXPECT_EQ(trained.loss_trace.size(), 10u);
  const auto& s = bundle_.test[0].snippet;
  const double a = ScoreWhitebox(trained.model, white, s, sel);
  EXPECT_EQ(a, ScoreWhitebox(trained.model, white, s, sel));
  EXPECT_GT(a, 0.0);
  EXPECT_LT(a, 1.0);
  EXPECT_THROW(ScoreWhitebox(trained.model, white, s, LayerSelection({4})), ConfigError);
}

TEST_F(WhiteboxOracleTest, RejectsWrongAccessAndEmptyTrainSet) {
  const encoder::Oracle gray(encoder::AccessLevel::kGray, *model_, *tok_);
  const encoder::Oracle black(encoder::AccessLevel::kBlack, *model_, *tok_);
  const encoder::Oracle white(encoder::AccessLevel::kWhite, *model_, *tok_);
  const LayerSelection sel({2, 4});
  EXPECT_THROW(TrainWhitebox(bundle_, gray, sel, SmallInference(1)), AccessViolation);
  EXPECT_THROW(TrainWhitebox(bundle_, black, sel, SmallInference(1)), AccessViolation);
  auto empty = bundle_;
  empty.train.clear();
  EXPECT_THROW(TrainWhitebox(empty, white, sel, SmallInference(1)), ConfigError);
  EXPECT_THROW(TrainWhitebox(bundle_, white, LayerSelection({2, 5}), SmallInference(1)), ConfigError);
}

}  // namespace
}  // namespace cmi::attack
