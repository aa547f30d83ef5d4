#include "cmi/encoder/pretrain.hpp"

#include <cmath>

#include "cmi/common/error.hpp"
#include "cmi/nn/batch.hpp"

namespace cmi::encoder {

MaskedExample MaskTokens(std::span<const int> ids, double probability, int vocab_size, Rng& rng) {
  MaskedExample ex;
  ex.input.assign(ids.begin(), ids.end());
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i)
    if (ids[i] >= kNumSpecialTokens) candidates.push_back(i);
  if (candidates.empty()) return ex;
  std::vector<int> picked;
  for (int pos : candidates)
    if (Uniform01(rng) < probability) picked.push_back(pos);
  if (picked.empty()) picked.push_back(candidates[UniformIndex(rng, candidates.size())]);
  for (int pos : picked) {
    ex.targets.push_back({pos, ids[pos]});
    const double r = Uniform01(rng);
    if (r < 0.8) {
      ex.input[pos] = kMask;
    } else if (r < 0.9) {
      ex.input[pos] = kByteBase + static_cast<int>(UniformIndex(rng, vocab_size - kByteBase));
    }
  }
  return ex;
}

namespace {

std::vector<int> EncodeForTraining(const corpus::CodeSnippet& s, const Tokenizer& tok,
                                   const EncoderConfig& mc, const PretrainConfig& config,
                                   Rng& rng) {
  bool bimodal = false;
  if (s.nl) {
    switch (config.layout) {
      case InputLayout::kUnimodal: break;
      case InputLayout::kBimodal: bimodal = true; break;
      case InputLayout::kMixed: bimodal = Uniform01(rng) < config.bimodal_fraction; break;
    }
  }
  return tok.EncodeInput(s.code, bimodal ? s.nl : std::nullopt, mc.max_positions);
}

}  // namespace

PretrainResult TrainMaskedLm(std::span<const corpus::CodeSnippet> snippets,
                             const Tokenizer& tokenizer, const EncoderConfig& model_config,
                             const PretrainConfig& config) {
  if (snippets.empty()) throw ConfigError("masked-LM training corpus is empty");
  if (tokenizer.vocab_size() > model_config.vocab_size)
    throw ConfigError("tokenizer vocabulary (" + std::to_string(tokenizer.vocab_size()) +
                      ") exceeds encoder vocab_size (" + std::to_string(model_config.vocab_size) +
                      ")");
  if (config.steps < 0 || config.batch_size < 1) throw ConfigError("bad pretraining schedule");

  PretrainResult result{EncoderModel(model_config, DeriveSeed(config.seed, "init")), {}};
  EncoderModel& model = result.model;
  nn::AdamW optimizer(model.layout(), {.learning_rate = config.learning_rate,
                                       .weight_decay = config.weight_decay,
                                       .warmup_steps = config.warmup_steps});
  Rng batch_rng(DeriveSeed(config.seed, "batching"));
  Rng mask_rng(DeriveSeed(config.seed, "masking"));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::vector<float> grads(model.parameters().size());
  const int vocab = tokenizer.vocab_size();

  for (int step = 0; step < config.steps; ++step) {
    std::vector<MaskedExample> batch;
    batch.reserve(config.batch_size);
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        order = Permutation(snippets.size(), batch_rng);
        cursor = 0;
      }
      const auto& s = snippets[order[cursor++]];
      const auto ids = EncodeForTraining(s, tokenizer, model_config, config, mask_rng);
      batch.push_back(MaskTokens(ids, config.mask_probability, vocab, mask_rng));
    }
    std::fill(grads.begin(), grads.end(), 0.0f);
    const float scale = 1.0f / static_cast<float>(batch.size());
    const double loss =
        nn::AccumulateGradients(batch.size(), grads, [&](std::size_t i, float* g) {
          return model.MlmLoss(batch[i].input, batch[i].targets, scale, g);
        }) /
        static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw TrainingError("masked-LM loss became non-finite", step);
    optimizer.Step(model.mutable_parameters(), grads);
    result.loss_trace.push_back(loss);
  }
  return result;
}

PretrainResult PretrainEncoder(const corpus::Corpus& members, const Tokenizer& tokenizer,
                               const EncoderConfig& model_config, const PretrainConfig& config) {
  if (members.role != corpus::MembershipLabel::kMember)
    throw ContaminationError("target pretraining requires the member corpus, got '" +
                             members.tag + "' with the nonmember role");
  return TrainMaskedLm(members.snippets, tokenizer, model_config, config);
}

double MeanMlmLoss(const EncoderModel& model, const Tokenizer& tokenizer,
                   std::span<const corpus::CodeSnippet> snippets, double mask_probability,
                   std::uint64_t seed) {
  if (snippets.empty()) return 0.0;
  std::vector<MaskedExample> examples;
  Rng rng(seed);
  for (const auto& s : snippets) {
    const auto ids = tokenizer.EncodeInput(s.code, std::nullopt, model.config().max_positions);
    examples.push_back(MaskTokens(ids, mask_probability, tokenizer.vocab_size(), rng));
  }
  const auto losses = nn::ParallelMap<double>(examples.size(), [&](std::size_t i) {
    return model.MlmLoss(examples[i].input, examples[i].targets, 1.0f, nullptr);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

}  // namespace cmi::encoder
