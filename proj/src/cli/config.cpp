#include "cmi/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "cmi/common/error.hpp"

namespace cmi::cli {

std::string_view ToString(AttackKind kind) {
  switch (kind) {
    case AttackKind::kWhitebox: return "wb";
    case AttackKind::kGrayDirect: return "gb_direct";
    case AttackKind::kGrayShadow: return "gb_shadow";
    case AttackKind::kGrayEnsemble: return "gb_ensemble";
    case AttackKind::kBlackUni: return "bb_uni";
    case AttackKind::kBlackBi: return "bb_bi";
  }
  return "wb";
}

AttackKind ParseAttack(std::string_view text) {
  for (auto k : {AttackKind::kWhitebox, AttackKind::kGrayDirect, AttackKind::kGrayShadow,
                 AttackKind::kGrayEnsemble, AttackKind::kBlackUni, AttackKind::kBlackBi})
    if (ToString(k) == text) return k;
  throw ConfigError("unknown attack '" + std::string(text) + "'");
}

corpus::Setting SettingOf(AttackKind kind) {
  switch (kind) {
    case AttackKind::kWhitebox: return corpus::Setting::kWhitebox;
    case AttackKind::kGrayDirect:
    case AttackKind::kGrayShadow:
    case AttackKind::kGrayEnsemble: return corpus::Setting::kGraybox;
    case AttackKind::kBlackUni:
    case AttackKind::kBlackBi: return corpus::Setting::kBlackbox;
  }
  return corpus::Setting::kWhitebox;
}

double ExperimentConfig::EffectiveKnownFraction() const {
  return known_fraction ? *known_fraction : corpus::DefaultKnownFraction(setting());
}

encoder::EncoderConfig ExperimentConfig::EncoderSettings() const {
  encoder::EncoderConfig c;
  c.vocab_size = vocab_size;
  c.num_layers = num_layers;
  c.hidden_dim = hidden_dim;
  c.num_heads = num_heads;
  c.ff_dim = ff_dim;
  c.max_positions = max_positions;
  return c;
}

encoder::PretrainConfig ExperimentConfig::PretrainSettings() const {
  encoder::PretrainConfig c;
  c.steps = pretrain_steps;
  c.batch_size = pretrain_batch;
  c.learning_rate = pretrain_lr;
  c.warmup_steps = pretrain_warmup;
  return c;
}

namespace {

struct Key {
  std::string help;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const nlohmann::json&)> set;
};

template <class T>
T As(const nlohmann::json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

template <class T>
nlohmann::json Out(const T& v) {
  if constexpr (std::is_same_v<T, float>) {
    // Shortest decimal that round-trips the float, so 3e-4 prints as 0.0003.
    char buf[32];
    for (int digits = 6; digits <= 9; ++digits) {
      std::snprintf(buf, sizeof buf, "%.*g", digits, static_cast<double>(v));
      if (std::strtof(buf, nullptr) == v) break;
    }
    return std::strtod(buf, nullptr);
  } else {
    return nlohmann::json(v);
  }
}

#define CMI_KEY(name, help, field, type)                                           \
  {                                                                               \
    name, Key {                                                                   \
      help, [](const ExperimentConfig& c) { return Out(c.field); },   \
          [](ExperimentConfig& c, const nlohmann::json& v) { c.field = As<type>(v, name); } \
    }                                                                             \
  }

const std::map<std::string, Key>& Keys() {
  static const std::map<std::string, Key> keys = {
      CMI_KEY("members_path", "JSONL member corpus", members_path, std::string),
      CMI_KEY("nonmembers_path", "JSONL nonmember corpus", nonmembers_path, std::string),
      CMI_KEY("output_dir", "directory for every emitted file", output_dir, std::string),
      CMI_KEY("target_dir", "pretrained target to reuse (empty: train one)", target_dir,
              std::string),
      {"attack",
       {"wb | gb_direct | gb_shadow | gb_ensemble | bb_uni | bb_bi",
        [](const ExperimentConfig& c) { return nlohmann::json(ToString(c.attack)); },
        [](ExperimentConfig& c, const nlohmann::json& v) {
          c.attack = ParseAttack(As<std::string>(v, "attack"));
        }}},
      {"known_fraction",
       {"share of members the adversary knows (null: 0.70 white, 0.05 gray, 0 black)",
        [](const ExperimentConfig& c) {
          return c.known_fraction ? nlohmann::json(*c.known_fraction) : nlohmann::json(nullptr);
        },
        [](ExperimentConfig& c, const nlohmann::json& v) {
          if (v.is_null())
            c.known_fraction.reset();
          else
            c.known_fraction = As<double>(v, "known_fraction");
        }}},
      CMI_KEY("train_size", "members (and nonmembers) in the attack train mix", sizes.train, int),
      CMI_KEY("test_size", "members (and nonmembers) in the test mix", sizes.test, int),
      CMI_KEY("validation_size", "members (and nonmembers) in the validation mix",
              sizes.validation, int),
      CMI_KEY("seed", "root seed; every component derives a named sub-seed", seed, std::uint64_t),
      CMI_KEY("vocab_size", "BPE vocabulary budget", vocab_size, int),
      CMI_KEY("num_layers", "encoder depth", num_layers, int),
      CMI_KEY("hidden_dim", "encoder width", hidden_dim, int),
      CMI_KEY("num_heads", "encoder attention heads", num_heads, int),
      CMI_KEY("ff_dim", "encoder feed-forward width", ff_dim, int),
      CMI_KEY("max_positions", "encoder input length limit", max_positions, int),
      CMI_KEY("pretrain_steps", "target masked-LM steps", pretrain_steps, int),
      CMI_KEY("pretrain_batch", "target masked-LM batch size", pretrain_batch, int),
      CMI_KEY("pretrain_lr", "target masked-LM learning rate", pretrain_lr, float),
      CMI_KEY("pretrain_warmup", "target warmup steps", pretrain_warmup, int),
      CMI_KEY("layers", "layer selection such as \"2+4\" (empty: middle+last)", layers,
              std::string),
      {"pooling",
       {"classifier pooling: mean | cls",
        [](const ExperimentConfig& c) { return nlohmann::json(attack::ToString(c.inference.pooling)); },
        [](ExperimentConfig& c, const nlohmann::json& v) {
          c.inference.pooling = attack::ParsePooling(As<std::string>(v, "pooling"));
        }}},
      CMI_KEY("inference_steps", "classifier optimizer steps", inference.steps, int),
      CMI_KEY("inference_batch", "classifier batch size", inference.batch_size, int),
      CMI_KEY("inference_lr", "classifier learning rate", inference.learning_rate, float),
      CMI_KEY("inference_layers", "classifier attention blocks", inference.num_layers, int),
      {"kd_loss",
       {"distillation loss: mse | cos",
        [](const ExperimentConfig& c) { return nlohmann::json(attack::ToString(c.kd_loss)); },
        [](ExperimentConfig& c, const nlohmann::json& v) {
          c.kd_loss = attack::ParseKdLoss(As<std::string>(v, "kd_loss"));
        }}},
      CMI_KEY("distill_steps", "shadow distillation steps", distill.steps, int),
      CMI_KEY("distill_batch", "shadow distillation batch size", distill.batch_size, int),
      CMI_KEY("distill_lr", "shadow distillation learning rate", distill.learning_rate, float),
      {"meta",
       {"ensemble meta learner: gbr | logistic",
        [](const ExperimentConfig& c) { return nlohmann::json(attack::ToString(c.meta)); },
        [](ExperimentConfig& c, const nlohmann::json& v) {
          c.meta = attack::ParseMetaLearner(As<std::string>(v, "meta"));
        }}},
      CMI_KEY("gbr_rounds", "gradient-boost rounds", meta_config.rounds, int),
      CMI_KEY("gbr_depth", "gradient-boost tree depth", meta_config.depth, int),
      CMI_KEY("gbr_lr", "gradient-boost shrinkage", meta_config.learning_rate, double),
      CMI_KEY("logistic_l2", "logistic meta L2 penalty", meta_config.l2_penalty, double),
      CMI_KEY("calibration_steps", "calibration model masked-LM steps", calibration_steps, int),
      CMI_KEY("calibration_batch", "calibration model batch size", calibration_batch, int),
      CMI_KEY("k", "white/gray threshold rank fraction", k, double),
      CMI_KEY("g", "black-box threshold rank fraction", g, double),
      CMI_KEY("intervals", "bins per feature in the interval analysis", intervals, int),
  };
  return keys;
}

#undef CMI_KEY

}  // namespace

void ExperimentConfig::Set(const std::string& key, const nlohmann::json& value) {
  const auto& keys = Keys();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, value);
}

void ExperimentConfig::ApplyOverride(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  auto value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Set(key, value);
}

void ExperimentConfig::Validate() const {
  EncoderSettings().Validate();
  inference.Validate();
  if (known_fraction && !(*known_fraction >= 0.0 && *known_fraction <= 1.0))
    throw ConfigError("known_fraction must lie in [0, 1]");
  if (pretrain_steps < 0 || pretrain_batch < 1) throw ConfigError("bad pretraining schedule");
  if (distill.steps < 0 || distill.batch_size < 1) throw ConfigError("bad distillation schedule");
  if (calibration_steps < 0 || calibration_batch < 1) throw ConfigError("bad calibration schedule");
  if (!(k > 0 && k <= 1) || !(g > 0 && g <= 1)) throw ConfigError("k and g must lie in (0, 1]");
  if (intervals < 2) throw ConfigError("intervals must be at least 2");
  if (sizes.test < 1 || sizes.validation < 1 || sizes.train < 0)
    throw ConfigError("split sizes must be positive");
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, key] : Keys()) j[name] = key.get(*this);
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) c.Set(key, value);
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return FromJson(j);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::KeyHelp() {
  std::vector<std::pair<std::string, std::string>> out;
  const ExperimentConfig defaults;
  for (const auto& [name, key] : Keys())
    out.emplace_back(name, key.help + " [default " + key.get(defaults).dump() + "]");
  return out;
}

}  // namespace cmi::cli
