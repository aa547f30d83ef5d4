#include "cmi/cli/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cmi/attack/whitebox.hpp"
#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/corpus/features.hpp"
#include "cmi/encoder/oracle.hpp"
#include "cmi/nn/batch.hpp"

namespace cmi::cli {

namespace fs = std::filesystem;

namespace {

// Runs `fn`, rethrowing library errors as StageError naming `stage`.
template <class Fn>
auto Stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::vector<corpus::CodeSnippet> Snippets(std::span<const corpus::LabeledSnippet> set) {
  std::vector<corpus::CodeSnippet> out;
  for (const auto& ls : set) out.push_back(ls.snippet);
  return out;
}

std::vector<eval::ScoredExample> Label(std::span<const corpus::LabeledSnippet> set,
                                       std::span<const double> scores) {
  std::vector<eval::ScoredExample> out;
  for (std::size_t i = 0; i < set.size(); ++i)
    out.push_back({set[i].snippet.id, scores[i], set[i].label, std::nullopt});
  return out;
}

std::vector<int> Labels(std::span<const corpus::LabeledSnippet> set) {
  std::vector<int> out;
  for (const auto& ls : set) out.push_back(corpus::ToInt(ls.label));
  return out;
}

std::vector<corpus::CodeFeatures> TestFeatures(std::span<const corpus::LabeledSnippet> test) {
  const corpus::LexicalTokenizer lexer;
  const auto snippets = Snippets(test);
  const auto tfidf = corpus::FitTfIdf(snippets, lexer);
  std::vector<corpus::CodeFeatures> out;
  for (const auto& s : snippets)
    out.push_back(corpus::ExtractFeatures(s, lexer, corpus::ReservedWords(s.language), tfidf));
  return out;
}

double Mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

attack::InferenceConfig InferenceSettings(const ExperimentConfig& config) {
  attack::InferenceConfig c = config.inference;
  c.seed = DeriveSeed(config.seed, "inference");
  return c;
}

attack::LayerSelection Selection(const ExperimentConfig& config, int num_layers) {
  return config.layers.empty() ? attack::LayerSelection::Default(num_layers)
                               : attack::LayerSelection::Parse(config.layers);
}

// A base gray-box attack: how to build classifier input from a snippet.
struct BaseAttack {
  std::string name;
  attack::FeatureFn extract;
  int input_dim;
};

struct BaseOutcome {
  std::vector<double> validation;
  std::vector<double> test;
  std::vector<double> loss_trace;
};

BaseOutcome RunBase(const BaseAttack& base, const corpus::SplitBundle& bundle,
                    const attack::InferenceConfig& inference) {
  auto trained = attack::TrainClassifier(bundle.train, base.extract, base.input_dim, inference);
  return {attack::ScoreSet(trained.model, bundle.validation, base.extract),
          attack::ScoreSet(trained.model, bundle.test, base.extract), trained.loss_trace};
}

const attack::ShadowModel& GetShadow(const ExperimentConfig& config, const corpus::SplitBundle& bundle,
                                     const Target& target, ArtifactCache& cache) {
  const std::string key = std::string(attack::ToString(config.kd_loss)) + "/" +
                          std::to_string(config.seed) + "/" +
                          std::to_string(config.EffectiveKnownFraction());
  auto it = cache.shadows.find(key);
  if (it != cache.shadows.end()) return it->second;
  return Stage("distill", [&]() -> const attack::ShadowModel& {
    const encoder::Oracle gray(encoder::AccessLevel::kGray, target.model, target.tokenizer);
    std::vector<corpus::CodeSnippet> heldout;
    for (const auto& ls : bundle.validation)
      if (ls.label == corpus::MembershipLabel::kNonmember) heldout.push_back(ls.snippet);
    attack::DistillConfig dc = config.distill;
    dc.seed = DeriveSeed(config.seed, "distill");
    auto shadow = attack::DistillShadow(gray, target.tokenizer, bundle.known_pool,
                                        target.model.config(), dc, config.kd_loss, heldout);
    return cache.shadows.emplace(key, std::move(shadow)).first->second;
  });
}

const attack::CalibrationModel& GetCalibration(const ExperimentConfig& config,
                                               const corpus::SplitBundle& bundle,
                                               const corpus::Corpus& nonmembers,
                                               attack::CalibrationMode mode, ArtifactCache& cache) {
  auto& slot = mode == attack::CalibrationMode::kUnimodal ? cache.unimodal : cache.bimodal;
  if (slot) return *slot;
  return Stage("calibration", [&]() -> const attack::CalibrationModel& {
    // Test nonmembers stay out of the calibration corpus.
    std::unordered_set<std::string> test_ids;
    for (const auto& ls : bundle.test) test_ids.insert(ls.snippet.id);
    corpus::Corpus data{corpus::MembershipLabel::kNonmember, nonmembers.tag, {}};
    for (const auto& s : nonmembers.snippets)
      if (!test_ids.count(s.id)) data.snippets.push_back(s);
    attack::CalibrationConfig cc;
    cc.model = config.EncoderSettings();
    cc.vocab_size = config.vocab_size;
    cc.training.steps = config.calibration_steps;
    cc.training.batch_size = config.calibration_batch;
    cc.training.learning_rate = config.pretrain_lr;
    cc.training.warmup_steps = std::min(config.pretrain_warmup, config.calibration_steps);
    cc.training.seed = DeriveSeed(config.seed, "calibration");
    cc.training.layout = mode == attack::CalibrationMode::kUnimodal ? encoder::InputLayout::kUnimodal
                                                                    : encoder::InputLayout::kBimodal;
    slot = attack::TrainCalibration(data, mode, cc);
    return *slot;
  });
}

nlohmann::json TraceSummary(std::span<const double> trace) {
  if (trace.empty()) return {{"steps", 0}};
  return {{"steps", trace.size()}, {"first", trace.front()}, {"last", trace.back()}};
}

}  // namespace

Target TrainTarget(const corpus::Corpus& members, const ExperimentConfig& config) {
  if (members.role != corpus::MembershipLabel::kMember)
    throw ContaminationError("the target trains on the member corpus only");
  auto tokenizer = encoder::Tokenizer::Train(members.snippets, config.vocab_size);
  auto mc = config.EncoderSettings();
  mc.vocab_size = tokenizer.vocab_size();
  auto pc = config.PretrainSettings();
  pc.seed = DeriveSeed(config.seed, "pretrain");
  auto result = encoder::PretrainEncoder(members, tokenizer, mc, pc);
  return {std::move(tokenizer), std::move(result.model), std::move(result.loss_trace)};
}

std::vector<fs::path> SaveTarget(const Target& target, const fs::path& dir) {
  fs::create_directories(dir);
  target.tokenizer.Save(dir);
  target.model.Save(dir / "model.bin", {{"loss_trace", TraceSummary(target.loss_trace)}});
  return {dir / "model.bin", dir / "vocab.txt", dir / "merges.txt"};
}

Target LoadTarget(const fs::path& dir) {
  return {encoder::Tokenizer::Load(dir), encoder::EncoderModel::Load(dir / "model.bin"), {}};
}

void ValidateInputs(const ExperimentConfig& config, const corpus::Corpus& members,
                    const corpus::Corpus& nonmembers) {
  config.Validate();
  if (config.attack == AttackKind::kBlackBi) {
    for (const auto* c : {&members, &nonmembers}) {
      const auto missing = std::count_if(c->snippets.begin(), c->snippets.end(),
                                         [](const auto& s) { return !s.nl.has_value(); });
      if (missing > 0)
        throw InputError("bb_bi needs a description for every snippet; corpus '" + c->tag +
                         "' has " + std::to_string(missing) + " without one");
    }
  }
  if (!config.layers.empty()) Selection(config, config.num_layers).CheckAgainst(config.num_layers);
}

std::map<std::string, std::uint64_t> SubSeeds(std::uint64_t root) {
  std::map<std::string, std::uint64_t> out;
  for (const char* name : {"split", "pretrain", "inference", "distill", "calibration", "stacking"})
    out[name] = DeriveSeed(root, name);
  return out;
}

AttackRun RunAttack(const ExperimentConfig& config, const corpus::Corpus& members,
                    const corpus::Corpus& nonmembers, const Target& target, ArtifactCache* cache) {
  ValidateInputs(config, members, nonmembers);
  ArtifactCache local;
  ArtifactCache& artifacts = cache ? *cache : local;
  const auto setting = config.setting();
  const auto bundle = Stage("split", [&] {
    return corpus::BuildSplits(members.snippets, nonmembers.snippets, setting,
                               config.EffectiveKnownFraction(), config.sizes, config.seed);
  });
  const auto inference = InferenceSettings(config);
  const encoder::Oracle white(encoder::AccessLevel::kWhite, target.model, target.tokenizer);
  const encoder::Oracle gray(encoder::AccessLevel::kGray, target.model, target.tokenizer);
  const encoder::Oracle black(encoder::AccessLevel::kBlack, target.model, target.tokenizer);

  std::vector<double> val_scores, test_scores, raw_test;
  nlohmann::json details = nlohmann::json::object();

  auto direct_base = [&] {
    return BaseAttack{"gb_direct",
                      [&](const corpus::CodeSnippet& s) { return attack::DirectFeatures(gray, s); },
                      gray.hidden_dim()};
  };
  auto shadow_base = [&](const encoder::Oracle& own, const attack::LayerSelection& sel) {
    return BaseAttack{"gb_shadow",
                      [&own, sel](const corpus::CodeSnippet& s) {
                        return attack::WhiteboxFeatures(own, s, sel);
                      },
                      sel.size() * own.hidden_dim()};
  };

  switch (config.attack) {
    case AttackKind::kWhitebox: {
      const auto sel = Selection(config, white.num_layers());
      auto trained = Stage("train", [&] { return attack::TrainWhitebox(bundle, white, sel, inference); });
      Stage("score", [&] {
        auto extract = [&](const corpus::CodeSnippet& s) { return attack::WhiteboxFeatures(white, s, sel); };
        val_scores = attack::ScoreSet(trained.model, bundle.validation, extract);
        test_scores = attack::ScoreSet(trained.model, bundle.test, extract);
      });
      details["layers"] = sel.ToString();
      details["train_loss"] = TraceSummary(trained.loss_trace);
      break;
    }
    case AttackKind::kGrayDirect: {
      auto out = Stage("train", [&] {
        if (bundle.train.empty()) throw ConfigError("gray-box train set is empty");
        return RunBase(direct_base(), bundle, inference);
      });
      val_scores = out.validation;
      test_scores = out.test;
      details["train_loss"] = TraceSummary(out.loss_trace);
      break;
    }
    case AttackKind::kGrayShadow:
    case AttackKind::kGrayEnsemble: {
      const auto& shadow = GetShadow(config, bundle, target, artifacts);
      const encoder::Oracle own(encoder::AccessLevel::kWhite, shadow.encoder, target.tokenizer);
      const auto sel = Selection(config, own.num_layers());
      sel.CheckAgainst(own.num_layers());
      details["layers"] = sel.ToString();
      details["kd_loss"] = attack::ToString(shadow.kind);
      details["distill_loss"] = TraceSummary(shadow.distill_trace);
      if (shadow.heldout_initial) details["heldout_kd_initial"] = *shadow.heldout_initial;
      if (shadow.heldout_final) details["heldout_kd_final"] = *shadow.heldout_final;
      if (config.attack == AttackKind::kGrayShadow) {
        auto out = Stage("train", [&] { return RunBase(shadow_base(own, sel), bundle, inference); });
        val_scores = out.validation;
        test_scores = out.test;
        details["train_loss"] = TraceSummary(out.loss_trace);
        break;
      }
      const std::vector<BaseAttack> bases = {direct_base(), shadow_base(own, sel)};
      const auto labels = Labels(bundle.train);
      // Out-of-fold base scores for the meta learner.
      std::vector<std::vector<double>> oof(bundle.train.size(), std::vector<double>(bases.size()));
      Stage("stacking", [&] {
        const auto folds = attack::TwoFoldAssignment(labels, DeriveSeed(config.seed, "stacking"));
        for (int f = 0; f < 2; ++f) {
          corpus::SplitBundle part;
          part.setting = bundle.setting;
          std::vector<corpus::LabeledSnippet> held;
          for (std::size_t i = 0; i < bundle.train.size(); ++i)
            (folds[i] == f ? held : part.train).push_back(bundle.train[i]);
          for (std::size_t b = 0; b < bases.size(); ++b) {
            auto trained = attack::TrainClassifier(part.train, bases[b].extract, bases[b].input_dim, inference);
            const auto scores = attack::ScoreSet(trained.model, held, bases[b].extract);
            std::size_t h = 0;
            for (std::size_t i = 0; i < bundle.train.size(); ++i)
              if (folds[i] == f) oof[i][b] = scores[h++];
          }
        }
      });
      std::vector<std::string> names;
      std::vector<BaseOutcome> full;
      Stage("train", [&] {
        for (const auto& base : bases) {
          names.push_back(base.name);
          full.push_back(RunBase(base, bundle, inference));
        }
      });
      const auto ensemble = Stage("ensemble", [&] {
        return attack::EnsembleModel::Fit(oof, labels, config.meta, config.meta_config, names);
      });
      auto combine = [&](std::size_t n, auto column) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> row;
          for (const auto& f : full) row.push_back(column(f)[i]);
          out[i] = ensemble.Predict(row);
        }
        return out;
      };
      val_scores = combine(bundle.validation.size(), [](const BaseOutcome& o) { return o.validation; });
      test_scores = combine(bundle.test.size(), [](const BaseOutcome& o) { return o.test; });
      details["meta"] = attack::ToString(config.meta);
      nlohmann::json base_auc = nlohmann::json::object();
      for (std::size_t b = 0; b < bases.size(); ++b)
        base_auc[names[b]] = eval::ComputeAuc(Label(bundle.test, full[b].test));
      details["base_auc"] = base_auc;
      break;
    }
    case AttackKind::kBlackUni:
    case AttackKind::kBlackBi: {
      const bool bi = config.attack == AttackKind::kBlackBi;
      const auto mode = bi ? attack::CalibrationMode::kBimodal : attack::CalibrationMode::kUnimodal;
      const auto& calib = GetCalibration(config, bundle, nonmembers, mode, artifacts);
      Stage("score", [&] {
        auto score = [&](const corpus::LabeledSnippet& ls) {
          return bi ? attack::BimodalScore(black, calib, ls.snippet)
                    : attack::UnimodalScore(black, calib, ls.snippet);
        };
        const auto val = nn::ParallelMap<attack::CalibratedScore>(
            bundle.validation.size(), [&](std::size_t i) { return score(bundle.validation[i]); });
        const auto test = nn::ParallelMap<attack::CalibratedScore>(
            bundle.test.size(), [&](std::size_t i) { return score(bundle.test[i]); });
        for (const auto& s : val) val_scores.push_back(s.MemberOriented());
        for (const auto& s : test) {
          test_scores.push_back(s.MemberOriented());
          raw_test.push_back(s.value);
        }
      });
      std::vector<double> raw_member, raw_nonmember;
      for (std::size_t i = 0; i < bundle.test.size(); ++i)
        (bundle.test[i].label == corpus::MembershipLabel::kMember ? raw_member : raw_nonmember)
            .push_back(raw_test[i]);
      details["score_kind"] = bi ? "s_bi" : "s_uni";
      details["mean_raw_member"] = Mean(raw_member);
      details["mean_raw_nonmember"] = Mean(raw_nonmember);
      details["calibration_loss"] = TraceSummary(calib.loss_trace);
      details["calibration_corpus"] = calib.training_corpus_tag;
      break;
    }
  }

  AttackRun run;
  run.test = Label(bundle.test, test_scores);
  run.validation = Label(bundle.validation, val_scores);
  run.raw_test_scores = raw_test;
  run.report = Stage("report", [&] {
    eval::ReportOptions opts{config.k, config.g, config.intervals};
    return eval::BuildReport(std::string(ToString(config.attack)), setting, run.test, run.validation,
                             TestFeatures(bundle.test), opts);
  });
  details["known_fraction"] = config.EffectiveKnownFraction();
  details["split"] = {{"train", bundle.train.size()},
                      {"validation", bundle.validation.size()},
                      {"test", bundle.test.size()},
                      {"known_pool", bundle.known_pool.size()}};
  run.report.details = std::move(details);
  return run;
}

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void Manifest::Add(const fs::path& file) { files_.push_back(file); }

fs::path Manifest::Write(const nlohmann::json& extra) const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : files_)
    files.push_back({{"path", fs::relative(f, root_).generic_string()},
                     {"sha256", Sha256File(f)},
                     {"bytes", fs::file_size(f)}});
  nlohmann::json j = extra;
  j["files"] = std::move(files);
  const auto path = root_ / "manifest.json";
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
  return path;
}

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

eval::AttackReport RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  if (config.members_path.empty() || config.nonmembers_path.empty())
    throw ConfigError("members_path and nonmembers_path are required");
  const auto members = Stage("load", [&] {
    return corpus::LoadCorpus(config.members_path, corpus::MembershipLabel::kMember);
  });
  const auto nonmembers = Stage("load", [&] {
    return corpus::LoadCorpus(config.nonmembers_path, corpus::MembershipLabel::kNonmember);
  });
  ValidateInputs(config, members, nonmembers);

  const fs::path out_dir = config.output_dir;
  fs::create_directories(out_dir);
  Manifest manifest(out_dir);
  Target target = Stage("pretrain", [&] {
    if (!config.target_dir.empty()) return LoadTarget(config.target_dir);
    auto t = TrainTarget(members, config);
    for (const auto& f : SaveTarget(t, out_dir / "target")) manifest.Add(f);
    return t;
  });

  auto run = RunAttack(config, members, nonmembers, target);

  const auto report_json = out_dir / "report.json";
  WriteText(report_json, run.report.ToJson().dump(2) + "\n");
  WriteText(out_dir / "report.txt", run.report.ToTable());
  {
    std::ostringstream csv;
    run.report.WriteIntervalCsv(csv);
    WriteText(out_dir / "intervals.csv", csv.str());
  }
  {
    std::ostringstream csv;
    eval::WriteScoreCsv(csv, run.test);
    WriteText(out_dir / "scores.csv", csv.str());
  }
  for (const char* f : {"report.json", "report.txt", "intervals.csv", "scores.csv"})
    manifest.Add(out_dir / f);
  if (!run.raw_test_scores.empty()) {
    std::ostringstream csv;
    csv << "id,kind,raw_value,normalized_value\n";
    const std::string kind = config.attack == AttackKind::kBlackBi ? "s_bi" : "s_uni";
    for (std::size_t i = 0; i < run.test.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", run.raw_test_scores[i], run.test[i].score);
      csv << run.test[i].id << ',' << kind << ',' << buf << '\n';
    }
    WriteText(out_dir / "calibrated_scores.csv", csv.str());
    manifest.Add(out_dir / "calibrated_scores.csv");
  }
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [name, value] : SubSeeds(config.seed)) seeds[name] = value;
  manifest.Write({{"tool", "cmi"},
                  {"version", "1.0.0"},
                  {"verb", "attack"},
                  {"config", config.ToJson()},
                  {"seeds", seeds}});
  return run.report;
}

SweepAxis ParseSweepAxis(std::string_view text) {
  if (text == "known_fraction") return SweepAxis::kKnownFraction;
  if (text == "kd_loss") return SweepAxis::kKdLoss;
  if (text == "layer_selection") return SweepAxis::kLayerSelection;
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

std::string_view ToString(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kKnownFraction: return "known_fraction";
    case SweepAxis::kKdLoss: return "kd_loss";
    case SweepAxis::kLayerSelection: return "layer_selection";
  }
  return "known_fraction";
}

std::vector<eval::AttackReport> RunSweep(const ExperimentConfig& base, SweepAxis axis,
                                         const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const bool shadow_attack =
      base.attack == AttackKind::kGrayShadow || base.attack == AttackKind::kGrayEnsemble;
  if (axis == SweepAxis::kKdLoss && !shadow_attack)
    throw ConfigError("the kd_loss axis needs gb_shadow or gb_ensemble");
  if (axis == SweepAxis::kLayerSelection &&
      !(base.attack == AttackKind::kWhitebox || shadow_attack))
    throw ConfigError("the layer_selection axis needs wb, gb_shadow or gb_ensemble");
  if (axis == SweepAxis::kKnownFraction && base.setting() == corpus::Setting::kBlackbox)
    throw ConfigError("black-box attacks have no known members to sweep");

  // Validate every value before running anything.
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    ExperimentConfig c = base;
    switch (axis) {
      case SweepAxis::kKnownFraction: c.ApplyOverride("known_fraction=" + v); break;
      case SweepAxis::kKdLoss: c.kd_loss = attack::ParseKdLoss(v); break;
      case SweepAxis::kLayerSelection: c.layers = attack::LayerSelection::Parse(v).ToString(); break;
    }
    c.output_dir = (fs::path(base.output_dir) / (std::string(ToString(axis)) + "-" + v)).string();
    c.Validate();
    configs.push_back(std::move(c));
  }

  const fs::path out_dir = base.output_dir;
  fs::create_directories(out_dir);
  // Pretrain once and share the target across the sweep.
  const auto members = corpus::LoadCorpus(base.members_path, corpus::MembershipLabel::kMember);
  std::string target_dir = base.target_dir;
  if (target_dir.empty()) {
    auto target = Stage("pretrain", [&] { return TrainTarget(members, base); });
    SaveTarget(target, out_dir / "target");
    target_dir = (out_dir / "target").string();
  }

  std::vector<eval::AttackReport> reports;
  std::ostringstream summary;
  summary << "axis,value,attack,auc,acc,acc_member,acc_nonmember,threshold\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    configs[i].target_dir = target_dir;
    auto report = RunExperiment(configs[i]);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.9g", report.auc, report.acc,
                  report.acc_member, report.acc_nonmember, report.threshold);
    summary << ToString(axis) << ',' << values[i] << ',' << report.attack_name << ',' << buf << '\n';
    reports.push_back(std::move(report));
  }
  WriteText(out_dir / "summary.csv", summary.str());
  return reports;
}

}  // namespace cmi::cli
