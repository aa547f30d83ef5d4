#include "cmi/encoder/oracle.hpp"

#include "cmi/common/error.hpp"

namespace cmi::encoder {

std::string_view ToString(AccessLevel level) {
  switch (level) {
    case AccessLevel::kWhite: return "white";
    case AccessLevel::kGray: return "gray";
    case AccessLevel::kBlack: return "black";
  }
  return "unknown";
}

Oracle::Oracle(AccessLevel level, const EncoderModel& model, const Tokenizer& tokenizer)
    : level_(level), model_(&model), tokenizer_(&tokenizer) {
  if (tokenizer.vocab_size() > model.config().vocab_size)
    throw ConfigError("tokenizer vocabulary exceeds the encoder's");
}

std::vector<int> Oracle::Ids(std::string_view code, const std::optional<std::string>& nl) const {
  return tokenizer_->EncodeInput(code, nl, model_->config().max_positions);
}

EncodingResult Oracle::EncodeAll(std::string_view code, const std::optional<std::string>& nl) const {
  if (level_ != AccessLevel::kWhite)
    throw AccessViolation(std::string(ToString(level_)) +
                          "-box oracle cannot expose intermediate layers");
  return model_->Forward(Ids(code, nl));
}

Matrix Oracle::EncodeLayer(std::string_view code, const std::optional<std::string>& nl,
                           int layer) const {
  const int n = num_layers();
  if (layer < 1 || layer > n)
    throw AccessViolation("layer " + std::to_string(layer) + " does not exist");
  if (layer != n && level_ != AccessLevel::kWhite)
    throw AccessViolation(std::string(ToString(level_)) + "-box oracle only exposes layer " +
                          std::to_string(n) + ", not layer " + std::to_string(layer));
  EncodingResult r = model_->Forward(Ids(code, nl));
  return std::move(r.layer_outputs[layer - 1]);
}

Matrix Oracle::EncodeLast(std::string_view code, const std::optional<std::string>& nl) const {
  return EncodeLayer(code, nl, num_layers());
}

}  // namespace cmi::encoder
