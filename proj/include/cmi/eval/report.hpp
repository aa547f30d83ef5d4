#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/corpus/corpus.hpp"
#include "cmi/corpus/features.hpp"
#include "cmi/eval/metrics.hpp"

namespace cmi::eval {

struct AttackReport {
  std::string attack_name;
  std::string setting;
  double auc = 0.0;
  double acc = 0.0;
  double acc_member = 0.0;
  double acc_nonmember = 0.0;
  double threshold = 0.0;
  std::size_t n_test = 0;
  std::size_t n_member = 0;
  std::size_t n_nonmember = 0;
  std::vector<IntervalRow> interval_rows;
  nlohmann::json details = nlohmann::json::object();  // attack-specific extras

  nlohmann::json ToJson() const;
  // Fixed-width summary for terminals.
  std::string ToTable() const;
  // feature,interval_index,lower,upper,count,mean_normalized_score
  void WriteIntervalCsv(std::ostream& out) const;
};

struct ReportOptions {
  double k = 0.15;
  double g = 0.6;
  int n_intervals = 5;
};

// Picks the threshold from `validation`, labels `test`, and fills every
// metric plus the interval analysis over the three code features of the
// test snippets.
AttackReport BuildReport(const std::string& attack_name, corpus::Setting setting,
                         std::vector<ScoredExample>& test, std::span<const ScoredExample> validation,
                         std::span<const corpus::CodeFeatures> test_features,
                         const ReportOptions& options = {});

// One line per example: id,label,score,predicted
void WriteScoreCsv(std::ostream& out, std::span<const ScoredExample> examples);

}  // namespace cmi::eval
