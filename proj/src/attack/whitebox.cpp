#include "cmi/attack/whitebox.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>

#include "cmi/common/error.hpp"
#include "cmi/nn/batch.hpp"

namespace cmi::attack {

LayerSelection::LayerSelection(std::vector<int> layers) : layers_(std::move(layers)) {
  if (layers_.empty() || layers_.size() > 2) throw ConfigError("layer selection needs 1 or 2 layers");
  for (int l : layers_)
    if (l < 1) throw ConfigError("layer indices are 1-based");
  if (layers_.size() == 2 && layers_[0] >= layers_[1])
    throw ConfigError("layer indices must be distinct and ascending, got " + ToString());
}

LayerSelection LayerSelection::Default(int num_layers) {
  if (num_layers < 1) throw ConfigError("encoder has no layers");
  const int mid = (num_layers + 1) / 2;
  if (mid == num_layers) return LayerSelection({num_layers});
  return LayerSelection({mid, num_layers});
}

LayerSelection LayerSelection::Parse(std::string_view text) {
  std::vector<int> layers;
  std::size_t start = 0;
  while (true) {
    const std::size_t plus = text.find('+', start);
    const std::string_view part =
        text.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
    int value = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || end != part.data() + part.size())
      throw ConfigError("bad layer selection '" + std::string(text) + "'");
    layers.push_back(value);
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return LayerSelection(std::move(layers));
}

void LayerSelection::CheckAgainst(int num_layers) const {
  if (layers_.back() > num_layers)
    throw ConfigError("layer selection " + ToString() + " exceeds the encoder's " +
                      std::to_string(num_layers) + " layers");
}

std::string LayerSelection::ToString() const {
  std::string out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(layers_[i]);
  }
  return out;
}

std::vector<Matrix> StackLayerOutputs(const encoder::EncodingResult& result,
                                      const LayerSelection& selection) {
  std::vector<Matrix> stack;
  for (int l : selection.layers()) stack.push_back(result.layer(l));
  return stack;
}

Matrix FlattenStack(std::span<const Matrix> stack) {
  if (stack.empty()) throw ConfigError("empty layer stack");
  const int rows = stack[0].rows;
  const int d = stack[0].cols;
  for (const auto& m : stack)
    if (m.rows != rows || m.cols != d) throw ConfigError("stacked layers differ in shape");
  const int k = static_cast<int>(stack.size());
  Matrix out(rows, k * d);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < k; ++j)
      std::memcpy(&out(r, j * d), stack[j].data.data() + static_cast<std::size_t>(r) * d, sizeof(float) * d);
  return out;
}

Matrix WhiteboxFeatures(const encoder::Oracle& oracle, const corpus::CodeSnippet& snippet,
                        const LayerSelection& selection) {
  const auto result = oracle.EncodeAll(snippet.code, std::nullopt);
  const auto stack = StackLayerOutputs(result, selection);
  return FlattenStack(stack);
}

std::vector<Matrix> ComputeFeatures(std::span<const corpus::LabeledSnippet> set,
                                    const FeatureFn& extract) {
  return nn::ParallelMap<Matrix>(set.size(), [&](std::size_t i) { return extract(set[i].snippet); });
}

TrainedAttack TrainClassifier(std::span<const corpus::LabeledSnippet> set, const FeatureFn& extract,
                              int input_dim, const InferenceConfig& config) {
  if (set.empty()) throw ConfigError("attack train set is empty");
  const auto features = ComputeFeatures(set, extract);
  std::vector<int> labels;
  labels.reserve(set.size());
  for (const auto& ls : set) labels.push_back(corpus::ToInt(ls.label));
  TrainedAttack out{InferenceModel(input_dim, config), {}};
  out.loss_trace = out.model.Train(features, labels);
  return out;
}

std::vector<double> ScoreSet(const InferenceModel& model, std::span<const corpus::LabeledSnippet> set,
                             const FeatureFn& extract) {
  return nn::ParallelMap<double>(set.size(),
                                 [&](std::size_t i) { return model.Score(extract(set[i].snippet)); });
}

TrainedAttack TrainWhitebox(const corpus::SplitBundle& bundle, const encoder::Oracle& oracle,
                            const LayerSelection& selection, const InferenceConfig& config) {
  if (oracle.level() != encoder::AccessLevel::kWhite)
    throw AccessViolation("white-box training needs white access, got " +
                          std::string(encoder::ToString(oracle.level())));
  if (bundle.setting != corpus::Setting::kWhitebox)
    throw ConfigError("white-box training needs a whitebox bundle");
  if (bundle.train.empty()) throw ConfigError("white-box train set is empty");
  selection.CheckAgainst(oracle.num_layers());
  return TrainClassifier(
      bundle.train,
      [&](const corpus::CodeSnippet& s) { return WhiteboxFeatures(oracle, s, selection); },
      selection.size() * oracle.hidden_dim(), config);
}

double ScoreWhitebox(const InferenceModel& model, const encoder::Oracle& oracle,
                     const corpus::CodeSnippet& snippet, const LayerSelection& selection) {
  if (model.input_dim() != selection.size() * oracle.hidden_dim())
    throw ConfigError("classifier input width does not match the layer selection");
  return model.Score(WhiteboxFeatures(oracle, snippet, selection));
}

}  // namespace cmi::attack
