#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmi/common/rng.hpp"
#include "cmi/corpus/snippet.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/tokenizer.hpp"

namespace cmi::encoder {

enum class InputLayout {
  kUnimodal,  // [CLS] code [EOS]
  kBimodal,   // [CLS] nl [SEP] code [EOS] (snippets without nl fall back to unimodal)
  kMixed,     // bimodal with probability bimodal_fraction when nl exists
};

struct PretrainConfig {
  int steps = 1200;
  int batch_size = 16;
  float learning_rate = 3e-4f;
  int warmup_steps = 100;
  float weight_decay = 0.01f;
  double mask_probability = 0.15;
  double bimodal_fraction = 0.5;
  InputLayout layout = InputLayout::kMixed;
  std::uint64_t seed = 1;
};

struct PretrainResult {
  EncoderModel model;
  std::vector<double> loss_trace;  // mean batch MLM loss per step
};

struct MaskedExample {
  std::vector<int> input;
  std::vector<MaskedTarget> targets;
};

// Picks each non-special position with probability `probability` (at least
// one). Picked positions become [MASK] 80% of the time, a random learned
// token 10%, and stay unchanged 10%.
MaskedExample MaskTokens(std::span<const int> ids, double probability, int vocab_size, Rng& rng);

// Masked-LM training over arbitrary snippets. Callers enforce corpus roles.
PretrainResult TrainMaskedLm(std::span<const corpus::CodeSnippet> snippets,
                             const Tokenizer& tokenizer, const EncoderConfig& model_config,
                             const PretrainConfig& config);

// Target pretraining. The corpus must carry the member role; anything else
// is a ContaminationError because membership signal only exists for data the
// target actually trained on.
PretrainResult PretrainEncoder(const corpus::Corpus& members, const Tokenizer& tokenizer,
                               const EncoderConfig& model_config, const PretrainConfig& config);

// Mean MLM loss of `model` over the unimodal encodings of `snippets`, with
// masks drawn from `seed`.
double MeanMlmLoss(const EncoderModel& model, const Tokenizer& tokenizer,
                   std::span<const corpus::CodeSnippet> snippets, double mask_probability,
                   std::uint64_t seed);

}  // namespace cmi::encoder
