#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/attack/graybox.hpp"
#include "cmi/attack/inference_model.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/pretrain.hpp"

namespace cmi::cli {

enum class AttackKind { kWhitebox, kGrayDirect, kGrayShadow, kGrayEnsemble, kBlackUni, kBlackBi };

std::string_view ToString(AttackKind kind);
AttackKind ParseAttack(std::string_view text);
// The setting an attack runs under.
corpus::Setting SettingOf(AttackKind kind);

// Flat experiment configuration. Every key has a default; see
// ExperimentConfig::KeyHelp() for the documented list.
struct ExperimentConfig {
  std::string members_path;
  std::string nonmembers_path;
  std::string output_dir = "cmi-out";
  std::string target_dir;  // reuse a pretrained target instead of training one
  AttackKind attack = AttackKind::kWhitebox;
  std::optional<double> known_fraction;  // default depends on the setting
  corpus::SplitSizes sizes;
  std::uint64_t seed = 1;

  int vocab_size = 4096;
  int num_layers = 4;
  int hidden_dim = 64;
  int num_heads = 4;
  int ff_dim = 128;
  int max_positions = 128;
  int pretrain_steps = 1200;
  int pretrain_batch = 16;
  float pretrain_lr = 3e-4f;
  int pretrain_warmup = 100;

  std::string layers;  // empty selects the middle and last layer
  attack::InferenceConfig inference;

  attack::KdLossKind kd_loss = attack::KdLossKind::kMse;
  attack::DistillConfig distill;

  attack::MetaLearner meta = attack::MetaLearner::kGradientBoost;
  attack::MetaConfig meta_config;

  int calibration_steps = 1200;
  int calibration_batch = 16;

  double k = 0.15;
  double g = 0.6;
  int intervals = 5;

  corpus::Setting setting() const { return SettingOf(attack); }
  double EffectiveKnownFraction() const;
  encoder::EncoderConfig EncoderSettings() const;
  encoder::PretrainConfig PretrainSettings() const;

  // Applies one key from JSON; unknown keys raise ConfigError.
  void Set(const std::string& key, const nlohmann::json& value);
  // "key=value"; the value is read as JSON when it parses, else as a string.
  void ApplyOverride(std::string_view assignment);
  void Validate() const;
  nlohmann::json ToJson() const;

  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig Load(const std::filesystem::path& path);
  static std::vector<std::pair<std::string, std::string>> KeyHelp();
};

}  // namespace cmi::cli
