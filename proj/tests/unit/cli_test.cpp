#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "cmi/cli/config.hpp"
#include "cmi/cli/experiment.hpp"
#include "cmi/common/error.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/corpus/synthetic.hpp"

namespace cmi::cli {
namespace {

namespace fs = std::filesystem;

// Small enough that a full pipeline runs in seconds.
ExperimentConfig TinyConfig() {
  ExperimentConfig c;
  c.sizes = {12, 12, 6};
  c.vocab_size = 320;
  c.num_layers = 2;
  c.hidden_dim = 16;
  c.num_heads = 2;
  c.ff_dim = 32;
  c.max_positions = 40;
  c.pretrain_steps = 10;
  c.pretrain_batch = 4;
  c.pretrain_warmup = 2;
  c.inference.model_dim = 16;
  c.inference.num_heads = 2;
  c.inference.ff_dim = 32;
  c.inference.steps = 4;
  c.inference.batch_size = 8;
  c.distill.steps = 4;
  c.distill.batch_size = 4;
  c.calibration_steps = 4;
  c.calibration_batch = 4;
  c.meta_config.rounds = 5;
  c.intervals = 3;
  return c;
}

TEST(ConfigTest, DefaultsMatchTheProtocol) {
  const ExperimentConfig c;
  EXPECT_DOUBLE_EQ(c.k, 0.15);
  EXPECT_DOUBLE_EQ(c.g, 0.6);
  EXPECT_EQ(c.meta, attack::MetaLearner::kGradientBoost);
  EXPECT_EQ(c.kd_loss, attack::KdLossKind::kMse);
  EXPECT_EQ(c.inference.batch_size, 128);
  EXPECT_EQ(c.inference.pooling, attack::Pooling::kMean);
  EXPECT_DOUBLE_EQ(c.EffectiveKnownFraction(), 0.7);
  ExperimentConfig gray;
  gray.attack = AttackKind::kGrayDirect;
  EXPECT_DOUBLE_EQ(gray.EffectiveKnownFraction(), 0.05);
  ExperimentConfig black;
  black.attack = AttackKind::kBlackUni;
  EXPECT_DOUBLE_EQ(black.EffectiveKnownFraction(), 0.0);
}

TEST(ConfigTest, OverridesAndUnknownKeys) {
  ExperimentConfig c;
  c.ApplyOverride("attack=gb_shadow");
  c.ApplyOverride("k=0.2");
  c.ApplyOverride("layers=2+4");
  c.ApplyOverride("kd_loss=cos");
  c.ApplyOverride("known_fraction=0.1");
  EXPECT_EQ(c.attack, AttackKind::kGrayShadow);
  EXPECT_DOUBLE_EQ(c.k, 0.2);
  EXPECT_EQ(c.layers, "2+4");
  EXPECT_EQ(c.kd_loss, attack::KdLossKind::kCos);
  EXPECT_DOUBLE_EQ(*c.known_fraction, 0.1);
  EXPECT_THROW(c.ApplyOverride("no_such_key=1"), ConfigError);
  EXPECT_THROW(c.ApplyOverride("k"), ConfigError);
  EXPECT_THROW(c.ApplyOverride("seed=\"abc\""), ConfigError);
  EXPECT_THROW(c.ApplyOverride("kd_loss=nst"), ConfigError);
  EXPECT_THROW(c.ApplyOverride("attack=foo"), ConfigError);
  c.k = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig c = TinyConfig();
  c.attack = AttackKind::kBlackBi;
  c.known_fraction = 0.3;
  c.meta = attack::MetaLearner::kLogistic;
  const auto back = ExperimentConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_THROW(ExperimentConfig::FromJson(nlohmann::json{{"bogus", 1}}), ConfigError);
  for (const auto& [key, help] : ExperimentConfig::KeyHelp()) EXPECT_FALSE(help.empty()) << key;
}

TEST(AttackKindTest, NamesAndSettings) {
  for (auto k : {AttackKind::kWhitebox, AttackKind::kGrayDirect, AttackKind::kGrayShadow,
                 AttackKind::kGrayEnsemble, AttackKind::kBlackUni, AttackKind::kBlackBi})
    EXPECT_EQ(ParseAttack(ToString(k)), k);
  EXPECT_EQ(SettingOf(AttackKind::kWhitebox), corpus::Setting::kWhitebox);
  EXPECT_EQ(SettingOf(AttackKind::kGrayEnsemble), corpus::Setting::kGraybox);
  EXPECT_EQ(SettingOf(AttackKind::kBlackBi), corpus::Setting::kBlackbox);
}

TEST(SeedTest, SubSeedsAreDistinctAndStable) {
  const auto seeds = SubSeeds(42);
  std::set<std::uint64_t> distinct;
  for (const auto& [name, s] : seeds) distinct.insert(s);
  EXPECT_EQ(distinct.size(), seeds.size());
  EXPECT_EQ(SubSeeds(42), seeds);
  EXPECT_NE(SubSeeds(43), seeds);
}

TEST(HashTest, KnownDigest) {
  const auto path = fs::temp_directory_path() / "cmi_hash_test.txt";
  std::ofstream(path) << "abc";
  EXPECT_EQ(Sha256File(path), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove(path);
}

TEST(ValidationTest, BimodalNeedsDescriptionsBeforeTraining) {
  auto bench = corpus::GenerateBenchmark(20, 20, 1);
  bench.nonmembers.snippets[3].nl.reset();
  ExperimentConfig c = TinyConfig();
  c.attack = AttackKind::kBlackBi;
  EXPECT_THROW(ValidateInputs(c, bench.members, bench.nonmembers), InputError);
  c.attack = AttackKind::kBlackUni;
  EXPECT_NO_THROW(ValidateInputs(c, bench.members, bench.nonmembers));
  c.layers = "1+3";
  EXPECT_THROW(ValidateInputs(c, bench.members, bench.nonmembers), ConfigError);
}

TEST(SweepTest, RejectsBadRequestsUpFront) {
  ExperimentConfig c = TinyConfig();
  EXPECT_THROW(RunSweep(c, SweepAxis::kKnownFraction, {}), ConfigError);
  EXPECT_THROW(RunSweep(c, SweepAxis::kKdLoss, {"mse"}), ConfigError);
  c.attack = AttackKind::kGrayShadow;
  EXPECT_THROW(RunSweep(c, SweepAxis::kKdLoss, {"mse", "nst"}), ConfigError);
  c.attack = AttackKind::kBlackUni;
  EXPECT_THROW(RunSweep(c, SweepAxis::kKnownFraction, {"0.1"}), ConfigError);
  EXPECT_EQ(ParseSweepAxis("kd_loss"), SweepAxis::kKdLoss);
  EXPECT_THROW(ParseSweepAxis("depth"), ConfigError);
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bench_ = new corpus::SyntheticBenchmark(corpus::GenerateBenchmark(80, 80, 2));
    target_ = new Target(TrainTarget(bench_->members, TinyConfig()));
  }
  static void TearDownTestSuite() {
    delete target_;
    delete bench_;
  }
  static corpus::SyntheticBenchmark* bench_;
  static Target* target_;
};

corpus::SyntheticBenchmark* PipelineTest::bench_ = nullptr;
Target* PipelineTest::target_ = nullptr;

TEST_F(PipelineTest, EveryAttackProducesAConsistentReport) {
  ArtifactCache cache;
  for (auto kind : {AttackKind::kWhitebox, AttackKind::kGrayDirect, AttackKind::kGrayShadow,
                    AttackKind::kGrayEnsemble, AttackKind::kBlackUni, AttackKind::kBlackBi}) {
    ExperimentConfig c = TinyConfig();
    c.attack = kind;
    if (SettingOf(kind) == corpus::Setting::kGraybox) c.known_fraction = 0.4;
    const auto run = RunAttack(c, bench_->members, bench_->nonmembers, *target_, &cache);
    const auto& r = run.report;
    EXPECT_EQ(r.attack_name, ToString(kind));
    EXPECT_EQ(r.n_test, 24u);
    EXPECT_EQ(r.n_member, 12u);
    EXPECT_GE(r.auc, 0.0);
    EXPECT_LE(r.auc, 1.0);
    EXPECT_NEAR(r.acc, (r.acc_member * r.n_member + r.acc_nonmember * r.n_nonmember) / r.n_test,
                1e-12);
    EXPECT_EQ(r.interval_rows.size(), 9u);
    if (SettingOf(kind) == corpus::Setting::kBlackbox) EXPECT_EQ(run.raw_test_scores.size(), 24u);
  }
  EXPECT_TRUE(cache.unimodal.has_value());
  EXPECT_TRUE(cache.bimodal.has_value());
  EXPECT_FALSE(cache.shadows.empty());
}

TEST_F(PipelineTest, SameSeedSameReport) {
  ExperimentConfig c = TinyConfig();
  const auto a = RunAttack(c, bench_->members, bench_->nonmembers, *target_);
  const auto b = RunAttack(c, bench_->members, bench_->nonmembers, *target_);
  EXPECT_EQ(a.report.ToJson(), b.report.ToJson());
}

TEST_F(PipelineTest, TargetSaveLoadRoundTrip) {
  const auto dir = fs::temp_directory_path() / "cmi_target_test";
  const auto files = SaveTarget(*target_, dir);
  EXPECT_EQ(files.size(), 3u);
  const auto back = LoadTarget(dir);
  EXPECT_EQ(back.model, target_->model);
  EXPECT_EQ(back.tokenizer, target_->tokenizer);
  fs::remove_all(dir);
}

TEST_F(PipelineTest, RefusesToPretrainOnNonmembers) {
  EXPECT_THROW(TrainTarget(bench_->nonmembers, TinyConfig()), ContaminationError);
}

TEST_F(PipelineTest, ExperimentWritesArtifactsAndManifest) {
  const auto dir = fs::temp_directory_path() / "cmi_experiment_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  corpus::WriteCorpus(dir / "members.jsonl", bench_->members.snippets);
  corpus::WriteCorpus(dir / "nonmembers.jsonl", bench_->nonmembers.snippets);
  ExperimentConfig c = TinyConfig();
  c.members_path = (dir / "members.jsonl").string();
  c.nonmembers_path = (dir / "nonmembers.jsonl").string();
  c.output_dir = (dir / "out").string();
  c.attack = AttackKind::kBlackUni;
  RunExperiment(c);
  for (const char* f : {"report.json", "report.txt", "intervals.csv", "scores.csv",
                        "calibrated_scores.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  std::ifstream in(dir / "out" / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_TRUE(manifest.contains("config"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cmi::cli
