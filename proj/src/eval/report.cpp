#include "cmi/eval/report.hpp"

#include <cstdio>
#include <sstream>

#include "cmi/common/error.hpp"

namespace cmi::eval {

namespace {

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Round-trip representation so CSV output is exact and stable.
std::string Exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json AttackReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : interval_rows) {
    rows.push_back({{"feature", r.feature},
                    {"interval_index", r.interval_index},
                    {"lower", r.lower},
                    {"upper", r.upper},
                    {"count", r.count},
                    {"mean_normalized_score", r.mean_normalized_score
                                                  ? nlohmann::json(*r.mean_normalized_score)
                                                  : nlohmann::json(nullptr)}});
  }
  return {{"attack", attack_name},
          {"setting", setting},
          {"auc", auc},
          {"acc", acc},
          {"acc_member", acc_member},
          {"acc_nonmember", acc_nonmember},
          {"threshold", threshold},
          {"n_test", n_test},
          {"n_member", n_member},
          {"n_nonmember", n_nonmember},
          {"interval_rows", std::move(rows)},
          {"details", details}};
}

std::string AttackReport::ToTable() const {
  std::ostringstream out;
  out << "attack      " << attack_name << " (" << setting << ")\n"
      << "test        " << n_test << " (" << n_member << " members, " << n_nonmember
      << " nonmembers)\n"
      << "AUC         " << Fixed(auc) << "\n"
      << "ACC         " << Fixed(acc) << "\n"
      << "ACC member  " << Fixed(acc_member) << "\n"
      << "ACC non     " << Fixed(acc_nonmember) << "\n"
      << "threshold   " << Fixed(threshold, 6) << "\n";
  return out.str();
}

void AttackReport::WriteIntervalCsv(std::ostream& out) const {
  out << "feature,interval_index,lower,upper,count,mean_normalized_score\n";
  for (const auto& r : interval_rows)
    out << r.feature << ',' << r.interval_index << ',' << Exact(r.lower) << ',' << Exact(r.upper)
        << ',' << r.count << ','
        << (r.mean_normalized_score ? Exact(*r.mean_normalized_score) : std::string()) << '\n';
}

AttackReport BuildReport(const std::string& attack_name, corpus::Setting setting,
                         std::vector<ScoredExample>& test, std::span<const ScoredExample> validation,
                         std::span<const corpus::CodeFeatures> test_features,
                         const ReportOptions& options) {
  if (test_features.size() != test.size())
    throw ConfigError("test features and test examples differ in length");
  AttackReport report;
  report.attack_name = attack_name;
  report.setting = std::string(corpus::ToString(setting));
  report.auc = ComputeAuc(test);
  report.threshold = SelectThreshold(validation, setting, options.k, options.g);
  ApplyThreshold(test, report.threshold);
  const Accuracies a = ComputeAccuracies(test);
  report.acc = a.acc;
  report.acc_member = a.acc_member;
  report.acc_nonmember = a.acc_nonmember;
  report.n_test = test.size();
  for (const auto& e : test) (e.label == MembershipLabel::kMember ? report.n_member : report.n_nonmember)++;

  std::vector<double> length, reserved, tfidf;
  for (const auto& f : test_features) {
    length.push_back(static_cast<double>(f.code_length));
    reserved.push_back(static_cast<double>(f.reserved_word_count));
    tfidf.push_back(f.avg_tfidf);
  }
  for (auto [name, values] : {std::pair{"code_length", &length},
                              std::pair{"reserved_words", &reserved},
                              std::pair{"avg_tfidf", &tfidf}}) {
    auto rows = IntervalAnalysis(test, *values, name, options.n_intervals);
    report.interval_rows.insert(report.interval_rows.end(), rows.begin(), rows.end());
  }
  return report;
}

void WriteScoreCsv(std::ostream& out, std::span<const ScoredExample> examples) {
  out << "id,label,score,predicted\n";
  for (const auto& e : examples)
    out << e.id << ',' << ToInt(e.label) << ',' << Exact(e.score) << ','
        << (e.predicted ? std::to_string(ToInt(*e.predicted)) : std::string()) << '\n';
}

}  // namespace cmi::eval
