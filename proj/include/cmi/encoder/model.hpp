#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/nn/layers.hpp"
#include "cmi/nn/matrix.hpp"

namespace cmi::encoder {

struct EncoderConfig {
  int vocab_size = 4096;
  int num_layers = 4;
  int hidden_dim = 64;
  int num_heads = 4;
  int ff_dim = 256;
  int max_positions = 128;
  std::string architecture_tag = "post-ln-transformer";

  void Validate() const;
  nlohmann::json ToJson() const;
  static EncoderConfig FromJson(const nlohmann::json& j);
  bool operator==(const EncoderConfig&) const = default;
};

// Per-layer token representations for one input.
struct EncodingResult {
  std::vector<int> token_ids;
  std::vector<Matrix> layer_outputs;  // layer_outputs[i] is layer i+1

  int num_layers() const { return static_cast<int>(layer_outputs.size()); }
  // 1-based; throws AccessViolation when the layer is not present.
  const Matrix& layer(int index) const;
};

struct MaskedTarget {
  int position;
  int token;
};

// Transformer encoder: token + position embeddings, embedding LayerNorm,
// N post-LN blocks, and a linear masked-token prediction head. Immutable
// after training; const member functions are safe to call concurrently.
class EncoderModel {
 public:
  EncoderModel(const EncoderConfig& config, std::uint64_t init_seed);

  const EncoderConfig& config() const { return config_; }
  const nn::ParameterLayout& layout() const { return layout_; }
  std::span<const float> parameters() const { return params_; }
  std::span<float> mutable_parameters() { return params_; }

  EncodingResult Forward(std::span<const int> ids) const;
  Matrix ForwardLast(std::span<const int> ids) const;

  struct Trace {
    std::vector<int> ids;
    nn::LayerNorm::Cache embedding_norm;
    std::vector<nn::TransformerBlock::Cache> blocks;
    Matrix last;
  };
  void ForwardTrace(std::span<const int> ids, Trace& trace) const;
  // Back-propagates d(loss)/d(last layer output) into `grads`.
  void Backward(const Trace& trace, const float* d_last, float* grads) const;

  // Mean cross-entropy over masked positions. When `grads` is non-null the
  // gradient of (scale * loss) is accumulated into it.
  double MlmLoss(std::span<const int> corrupted, std::span<const MaskedTarget> targets,
                 float scale, float* grads) const;

  bool operator==(const EncoderModel& other) const {
    return config_ == other.config_ && params_ == other.params_;
  }

  void Save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static EncoderModel Load(const std::filesystem::path& path, nlohmann::json* extra = nullptr);

 private:
  EncoderModel(const EncoderConfig& config);
  void BuildLayout();
  void Embed(std::span<const int> ids, std::vector<float>& sum) const;

  EncoderConfig config_;
  nn::ParameterLayout layout_;
  nn::TensorRef token_embedding_;
  nn::TensorRef position_embedding_;
  nn::LayerNorm embedding_norm_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::Linear mlm_head_;
  std::vector<float> params_;
};

}  // namespace cmi::encoder
