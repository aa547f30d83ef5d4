#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/nn/layers.hpp"
#include "cmi/nn/matrix.hpp"

namespace cmi::attack {

enum class Pooling { kMean, kCls };

std::string_view ToString(Pooling pooling);
Pooling ParsePooling(std::string_view text);

struct InferenceConfig {
  int model_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int ff_dim = 128;
  Pooling pooling = Pooling::kMean;
  int steps = 60;
  int batch_size = 128;
  float learning_rate = 3e-3f;  // 0.01 diverges intermittently at this scale
  float weight_decay = 0.01f;
  int warmup_steps = 10;
  std::uint64_t seed = 7;

  void Validate() const;
  nlohmann::json ToJson() const;
  static InferenceConfig FromJson(const nlohmann::json& j);
};

// Membership classifier over a token-by-feature matrix: a linear input
// projection, post-LN self-attention blocks, pooling over tokens and an
// affine head squashed by a sigmoid.
class InferenceModel {
 public:
  InferenceModel(int input_dim, const InferenceConfig& config);

  int input_dim() const { return input_dim_; }
  const InferenceConfig& config() const { return config_; }
  std::span<const float> parameters() const { return params_; }

  double Logit(const Matrix& features) const;
  // In (0, 1); logits are clamped to +-35 before squashing.
  double Score(const Matrix& features) const;

  // Binary cross-entropy training with AdamW. Labels are 0/1. Returns the
  // mean batch loss per step.
  std::vector<double> Train(std::span<const Matrix> features, std::span<const int> labels);

  void Save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static InferenceModel Load(const std::filesystem::path& path, nlohmann::json* extra = nullptr);

  bool operator==(const InferenceModel& other) const {
    return input_dim_ == other.input_dim_ && params_ == other.params_;
  }

 private:
  void CheckInput(const Matrix& features) const;
  // Loss of one example; accumulates d(scale * loss) into grads when non-null.
  double ExampleLoss(const Matrix& features, int label, float scale, float* grads) const;

  int input_dim_;
  InferenceConfig config_;
  nn::ParameterLayout layout_;
  nn::Linear input_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::Linear head_;
  std::vector<float> params_;
};

double Sigmoid(double logit);

}  // namespace cmi::attack
