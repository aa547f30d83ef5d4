#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmi/corpus/corpus.hpp"
#include "cmi/corpus/snippet.hpp"

namespace cmi::eval {

using corpus::MembershipLabel;

struct ScoredExample {
  std::string id;
  double score = 0.0;  // larger means more member-like
  MembershipLabel label = MembershipLabel::kNonmember;
  std::optional<MembershipLabel> predicted;
};

// P(member score > nonmember score) + 0.5 P(tie) over all member/nonmember
// pairs, computed from tie-grouped ranks in O(n log n).
double ComputeAuc(std::span<const ScoredExample> examples);

struct RocPoint {
  double fpr;
  double tpr;
};
// One point per distinct score, from (0,0) to (1,1).
std::vector<RocPoint> RocCurve(std::span<const ScoredExample> examples);

// Rank-fraction threshold. White/gray settings rank the member scores of
// the validation set, black-box ranks its nonmember scores. Scores are sorted
// descending (ties broken by id) and the score at 1-based rank
// ceil(fraction * n) is returned, with fraction = k (white/gray) or g (black).
double SelectThreshold(std::span<const ScoredExample> validation, corpus::Setting setting,
                       double k = 0.15, double g = 0.6);

// predicted = member iff score > theta.
void ApplyThreshold(std::span<ScoredExample> examples, double theta);

struct Accuracies {
  double acc = 0.0;
  double acc_member = 0.0;
  double acc_nonmember = 0.0;
};

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
};

ConfusionCounts CountConfusion(std::span<const ScoredExample> examples);
// Per-class accuracy is 0 for a class with no examples.
Accuracies ComputeAccuracies(std::span<const ScoredExample> examples);

// Min-max scaling into [0, 1]; a constant vector maps to all zeros.
std::vector<double> MinMaxNormalize(std::span<const double> values);

struct IntervalRow {
  std::string feature;
  int interval_index = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_normalized_score;  // empty when count == 0
};

// Equal-width bins over [min, max] of the feature; the last bin is closed.
std::vector<IntervalRow> IntervalAnalysis(std::span<const ScoredExample> examples,
                                          std::span<const double> feature_values,
                                          const std::string& feature_name, int n_intervals);

}  // namespace cmi::eval
