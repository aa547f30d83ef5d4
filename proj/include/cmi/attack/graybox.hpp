#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/attack/inference_model.hpp"
#include "cmi/attack/whitebox.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/oracle.hpp"
#include "cmi/encoder/tokenizer.hpp"

namespace cmi::attack {

enum class KdLossKind { kMse, kCos };

std::string_view ToString(KdLossKind kind);
// Accepts "mse" and "cos"; other distillation losses are rejected.
KdLossKind ParseKdLoss(std::string_view text);

// mse: mean over tokens of the squared L2 distance between rows.
// cos: mean over tokens of 1 - cosine similarity.
double KdLoss(const Matrix& teacher, const Matrix& student, KdLossKind kind);
// Same value; writes d(loss)/d(student) into `grad` (resized to match).
double KdLossGradient(const Matrix& teacher, const Matrix& student, KdLossKind kind, Matrix& grad);

struct DistillConfig {
  int steps = 200;
  int batch_size = 32;
  float learning_rate = 1e-3f;
  int warmup_steps = 20;
  float weight_decay = 0.01f;
  std::uint64_t seed = 11;
};

struct ShadowModel {
  encoder::EncoderModel encoder;
  std::string teacher_tag;
  KdLossKind kind = KdLossKind::kMse;
  std::vector<double> distill_trace;  // mean batch loss per step
  std::optional<double> heldout_initial;
  std::optional<double> heldout_final;
};

// Mean kd loss of `student` against the teacher's last layer over `snippets`.
double MeanKdLoss(const encoder::Oracle& teacher, const encoder::EncoderModel& student,
                  const encoder::Tokenizer& tokenizer,
                  std::span<const corpus::CodeSnippet> snippets, KdLossKind kind);

// Trains a student to reproduce the teacher's final-layer outputs on the
// known members. Only gray handles are accepted, so the teacher's inner
// layers are never visible here. The student reuses the teacher's public
// tokenizer so token positions line up. `init` seeds the student's weights
// (default: a fresh model of `student_config`).
ShadowModel DistillShadow(const encoder::Oracle& teacher, const encoder::Tokenizer& tokenizer,
                          std::span<const corpus::CodeSnippet> known_members,
                          const encoder::EncoderConfig& student_config,
                          const DistillConfig& config, KdLossKind kind,
                          std::span<const corpus::CodeSnippet> heldout = {},
                          const encoder::EncoderModel* init = nullptr);

// Classifier over the teacher's last-layer outputs.
TrainedAttack TrainGrayboxDirect(const corpus::SplitBundle& bundle, const encoder::Oracle& oracle,
                                 const InferenceConfig& config);
Matrix DirectFeatures(const encoder::Oracle& oracle, const corpus::CodeSnippet& snippet);

// Classifier over the shadow's inner layers (the adversary owns the shadow,
// so white access to it is legitimate).
TrainedAttack TrainGrayboxShadow(const corpus::SplitBundle& bundle, const ShadowModel& shadow,
                                 const encoder::Tokenizer& tokenizer,
                                 const LayerSelection& selection, const InferenceConfig& config);

enum class MetaLearner { kLogistic, kGradientBoost };

std::string_view ToString(MetaLearner meta);
MetaLearner ParseMetaLearner(std::string_view text);

struct MetaConfig {
  double l2_penalty = 1.0;  // logistic
  int rounds = 50;          // gradient boost
  int depth = 2;
  double learning_rate = 0.1;
};

// Combines base attack scores into one membership score in [0, 1].
class EnsembleModel {
 public:
  // Rows are examples, columns base attacks; labels are 0/1. At least one
  // column is required here; pipelines insist on two. Constant labels raise
  // DegenerateFitError.
  static EnsembleModel Fit(std::span<const std::vector<double>> base_scores,
                           std::span<const int> labels, MetaLearner meta,
                           const MetaConfig& config = {},
                           std::vector<std::string> base_names = {});

  double Predict(std::span<const double> row) const;
  MetaLearner meta() const { return meta_; }
  int num_bases() const { return num_bases_; }
  const std::vector<std::string>& base_names() const { return base_names_; }
  nlohmann::json ToJson() const;

  struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };

 private:
  MetaLearner meta_ = MetaLearner::kGradientBoost;
  int num_bases_ = 0;
  std::vector<std::string> base_names_;
  // logistic
  std::vector<double> weights_;
  double bias_ = 0.0;
  // gradient boost
  double init_ = 0.0;
  double shrinkage_ = 0.1;
  std::vector<std::vector<TreeNode>> trees_;
};

// Indices of a deterministic 2-way split of [0, n), balanced per label.
std::vector<int> TwoFoldAssignment(std::span<const int> labels, std::uint64_t seed);

}  // namespace cmi::attack
