#include "cmi/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmi/common/error.hpp"

namespace cmi::eval {

double ComputeAuc(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& e : examples)
    if (!std::isfinite(e.score)) throw MetricError("score of '" + e.id + "' is not finite");
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return examples[a].score < examples[b].score; });

  // For every member: 2 * (#nonmembers strictly below) + (#nonmembers tied).
  unsigned long long twice_wins = 0;
  unsigned long long members = 0;
  unsigned long long nonmembers_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    unsigned long long group_members = 0;
    unsigned long long group_nonmembers = 0;
    while (j < order.size() && examples[order[j]].score == examples[order[i]].score) {
      if (examples[order[j]].label == MembershipLabel::kMember)
        ++group_members;
      else
        ++group_nonmembers;
      ++j;
    }
    twice_wins += group_members * (2 * nonmembers_below + group_nonmembers);
    members += group_members;
    nonmembers_below += group_nonmembers;
    i = j;
  }
  if (members == 0 || nonmembers_below == 0)
    throw MetricError("AUC needs both member and nonmember examples");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(members) *
                                            static_cast<double>(nonmembers_below));
}

std::vector<RocPoint> RocCurve(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return examples[a].score > examples[b].score; });
  double pos = 0, neg = 0;
  for (const auto& e : examples) (e.label == MembershipLabel::kMember ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw MetricError("ROC needs both member and nonmember examples");
  std::vector<RocPoint> curve{{0.0, 0.0}};
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = examples[order[i]].score;
    while (i < order.size() && examples[order[i]].score == s) {
      (examples[order[i]].label == MembershipLabel::kMember ? tp : fp) += 1;
      ++i;
    }
    curve.push_back({fp / neg, tp / pos});
  }
  return curve;
}

double SelectThreshold(std::span<const ScoredExample> validation, corpus::Setting setting, double k,
                       double g) {
  const bool blackbox = setting == corpus::Setting::kBlackbox;
  const MembershipLabel wanted = blackbox ? MembershipLabel::kNonmember : MembershipLabel::kMember;
  const double fraction = blackbox ? g : k;
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("threshold rank fraction must lie in (0, 1]");
  std::vector<const ScoredExample*> relevant;
  for (const auto& e : validation)
    if (e.label == wanted) relevant.push_back(&e);
  if (relevant.empty())
    throw ConfigError(std::string("threshold selection needs validation ") +
                      (blackbox ? "nonmember" : "member") + " scores");
  std::sort(relevant.begin(), relevant.end(), [](const ScoredExample* a, const ScoredExample* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  });
  const double n = static_cast<double>(relevant.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, relevant.size());
  return relevant[rank - 1]->score;
}

void ApplyThreshold(std::span<ScoredExample> examples, double theta) {
  if (!std::isfinite(theta)) throw ConfigError("threshold must be finite");
  for (auto& e : examples)
    e.predicted = e.score > theta ? MembershipLabel::kMember : MembershipLabel::kNonmember;
}

ConfusionCounts CountConfusion(std::span<const ScoredExample> examples) {
  ConfusionCounts c;
  for (const auto& e : examples) {
    if (!e.predicted) throw StateError("example '" + e.id + "' has no prediction");
    const bool member = e.label == MembershipLabel::kMember;
    const bool said_member = *e.predicted == MembershipLabel::kMember;
    if (member) {
      (said_member ? c.true_positive : c.false_negative)++;
    } else {
      (said_member ? c.false_positive : c.true_negative)++;
    }
  }
  return c;
}

Accuracies ComputeAccuracies(std::span<const ScoredExample> examples) {
  const ConfusionCounts c = CountConfusion(examples);
  const double nm = static_cast<double>(c.true_positive + c.false_negative);
  const double nn = static_cast<double>(c.true_negative + c.false_positive);
  Accuracies a;
  a.acc_member = nm > 0 ? static_cast<double>(c.true_positive) / nm : 0.0;
  a.acc_nonmember = nn > 0 ? static_cast<double>(c.true_negative) / nn : 0.0;
  a.acc = nm + nn > 0 ? static_cast<double>(c.true_positive + c.true_negative) / (nm + nn) : 0.0;
  return a;
}

std::vector<double> MinMaxNormalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

std::vector<IntervalRow> IntervalAnalysis(std::span<const ScoredExample> examples,
                                          std::span<const double> feature_values,
                                          const std::string& feature_name, int n_intervals) {
  if (n_intervals < 2) throw ConfigError("interval analysis needs at least 2 intervals");
  if (feature_values.size() != examples.size())
    throw ConfigError("feature values and examples differ in length");
  if (examples.empty()) throw ConfigError("interval analysis over an empty set");
  for (double v : feature_values)
    if (!std::isfinite(v)) throw ConfigError("feature '" + feature_name + "' has a non-finite value");

  std::vector<double> scores;
  scores.reserve(examples.size());
  for (const auto& e : examples) scores.push_back(e.score);
  const auto normalized = MinMaxNormalize(scores);

  const auto [lo_it, hi_it] = std::minmax_element(feature_values.begin(), feature_values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / n_intervals;
  std::vector<IntervalRow> rows(n_intervals);
  std::vector<double> sums(n_intervals, 0.0);
  for (int b = 0; b < n_intervals; ++b) {
    rows[b].feature = feature_name;
    rows[b].interval_index = b;
    rows[b].lower = lo + width * b;
    rows[b].upper = b + 1 == n_intervals ? hi : lo + width * (b + 1);
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    int b = width > 0 ? static_cast<int>(std::floor((feature_values[i] - lo) / width)) : 0;
    b = std::clamp(b, 0, n_intervals - 1);
    rows[b].count++;
    sums[b] += normalized[i];
  }
  for (int b = 0; b < n_intervals; ++b)
    if (rows[b].count > 0) rows[b].mean_normalized_score = sums[b] / static_cast<double>(rows[b].count);
  return rows;
}

}  // namespace cmi::eval
