#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmi/attack/inference_model.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/oracle.hpp"

namespace cmi::attack {

// One or two 1-based encoder layers whose outputs feed the classifier.
class LayerSelection {
 public:
  explicit LayerSelection(std::vector<int> layers);
  // (ceil(N/2), N); a single-layer encoder selects just (1).
  static LayerSelection Default(int num_layers);
  // "2+4" or "4".
  static LayerSelection Parse(std::string_view text);

  const std::vector<int>& layers() const { return layers_; }
  int size() const { return static_cast<int>(layers_.size()); }
  int last() const { return layers_.back(); }
  // Throws ConfigError when a layer exceeds `num_layers`.
  void CheckAgainst(int num_layers) const;
  std::string ToString() const;
  bool operator==(const LayerSelection&) const = default;

 private:
  std::vector<int> layers_;
};

// Slice j equals layer layers[j] of the result.
std::vector<Matrix> StackLayerOutputs(const encoder::EncodingResult& result,
                                      const LayerSelection& selection);
// Concatenates k slices of shape L x d along the channel axis into L x (k d).
Matrix FlattenStack(std::span<const Matrix> stack);

// Inference input for one snippet under white access.
Matrix WhiteboxFeatures(const encoder::Oracle& oracle, const corpus::CodeSnippet& snippet,
                        const LayerSelection& selection);

struct TrainedAttack {
  InferenceModel model;
  std::vector<double> loss_trace;
};

// Trains the classifier on the bundle's train mix from white-access layer
// stacks. Gray or black handles raise AccessViolation.
TrainedAttack TrainWhitebox(const corpus::SplitBundle& bundle, const encoder::Oracle& oracle,
                            const LayerSelection& selection, const InferenceConfig& config);

double ScoreWhitebox(const InferenceModel& model, const encoder::Oracle& oracle,
                     const corpus::CodeSnippet& snippet, const LayerSelection& selection);

using FeatureFn = std::function<Matrix(const corpus::CodeSnippet&)>;

// Features for a whole set, computed in parallel (extractors must be pure).
std::vector<Matrix> ComputeFeatures(std::span<const corpus::LabeledSnippet> set,
                                    const FeatureFn& extract);

// Trains a fresh classifier on a labelled set.
TrainedAttack TrainClassifier(std::span<const corpus::LabeledSnippet> set, const FeatureFn& extract,
                              int input_dim, const InferenceConfig& config);

// Classifier scores for a labelled set, in set order.
std::vector<double> ScoreSet(const InferenceModel& model, std::span<const corpus::LabeledSnippet> set,
                             const FeatureFn& extract);

}  // namespace cmi::attack
