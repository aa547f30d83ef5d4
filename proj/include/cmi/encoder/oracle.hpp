#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cmi/encoder/model.hpp"
#include "cmi/encoder/tokenizer.hpp"

namespace cmi::encoder {

// Adversary knowledge level.
enum class AccessLevel { kWhite, kGray, kBlack };

std::string_view ToString(AccessLevel level);

// The only way attacks observe an encoder. White access returns every
// layer; gray and black access return the last layer only, as an
// embedding service would. The handle does not own the model or tokenizer.
class Oracle {
 public:
  Oracle(AccessLevel level, const EncoderModel& model, const Tokenizer& tokenizer);

  AccessLevel level() const { return level_; }
  int num_layers() const { return model_->config().num_layers; }
  int hidden_dim() const { return model_->config().hidden_dim; }

  // White only; AccessViolation otherwise.
  EncodingResult EncodeAll(std::string_view code, const std::optional<std::string>& nl) const;
  // Any level may read layer N; only white may read inner layers.
  Matrix EncodeLayer(std::string_view code, const std::optional<std::string>& nl, int layer) const;
  Matrix EncodeLast(std::string_view code, const std::optional<std::string>& nl) const;

 private:
  std::vector<int> Ids(std::string_view code, const std::optional<std::string>& nl) const;

  AccessLevel level_;
  const EncoderModel* model_;
  const Tokenizer* tokenizer_;
};

}  // namespace cmi::encoder
