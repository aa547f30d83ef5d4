#include "cmi/attack/blackbox.hpp"

#include <cctype>
#include <cmath>

#include "cmi/common/error.hpp"

namespace cmi::attack {

std::pair<std::string, std::string> CasePerturb(std::string_view code) {
  std::string lower(code);
  std::string upper(code);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return {std::move(lower), std::move(upper)};
}

std::vector<float> ClsVector(const encoder::Oracle& oracle, std::string_view code,
                             const std::optional<std::string>& nl) {
  const Matrix last = oracle.EncodeLast(code, nl);
  return {last.data.begin(), last.data.begin() + last.cols};
}

std::string_view ToString(CalibrationMode mode) {
  return mode == CalibrationMode::kBimodal ? "bimodal" : "unimodal";
}

CalibrationModel TrainCalibration(const corpus::Corpus& nonmembers, CalibrationMode mode,
                                  const CalibrationConfig& config) {
  if (nonmembers.role != corpus::MembershipLabel::kNonmember)
    throw ContaminationError("calibration models train on nonmember data only, got member corpus '" +
                             nonmembers.tag + "'");
  encoder::PretrainConfig training = config.training;
  std::vector<corpus::CodeSnippet> data;
  if (mode == CalibrationMode::kUnimodal) {
    if (training.layout != encoder::InputLayout::kUnimodal)
      throw ModeError("unimodal calibration cannot train on a bimodal layout");
    data = nonmembers.snippets;
  } else {
    if (training.layout != encoder::InputLayout::kBimodal)
      throw ModeError("bimodal calibration trains on the bimodal layout only");
    for (const auto& s : nonmembers.snippets)
      if (s.nl) data.push_back(s);
    if (data.empty()) throw InputError("bimodal calibration needs snippets with descriptions");
  }
  if (data.empty()) throw EmptyCorpusError("calibration corpus '" + nonmembers.tag + "' is empty");

  auto tokenizer = encoder::Tokenizer::Train(data, config.vocab_size);
  encoder::EncoderConfig model = config.model;
  model.vocab_size = tokenizer.vocab_size();
  auto trained = encoder::TrainMaskedLm(data, tokenizer, model, training);
  return {std::move(tokenizer), std::move(trained.model), mode, nonmembers.tag,
          std::move(trained.loss_trace)};
}

namespace {

double Distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ConfigError("[CLS] vectors differ in width");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

double UnimodalFormula(std::span<const float> target_lower, std::span<const float> target_upper,
                       std::span<const float> calib_lower, std::span<const float> calib_upper) {
  return Distance(target_lower, target_upper) - Distance(calib_lower, calib_upper);
}

double BimodalFormula(std::span<const float> target_code, std::span<const float> target_nl,
                      std::span<const float> calib_code, std::span<const float> calib_nl) {
  return Distance(target_code, target_nl) - Distance(calib_code, calib_nl);
}

CalibratedScore UnimodalScore(const encoder::Oracle& target, const CalibrationModel& calib,
                              const corpus::CodeSnippet& snippet) {
  if (calib.mode != CalibrationMode::kUnimodal)
    throw ModeError("unimodal scoring needs a unimodal calibration model");
  const auto [lower, upper] = CasePerturb(snippet.code);
  const auto own = calib.oracle();
  return {UnimodalFormula(ClsVector(target, lower), ClsVector(target, upper), ClsVector(own, lower),
                          ClsVector(own, upper)),
          ScoreKind::kUnimodal};
}

CalibratedScore BimodalScore(const encoder::Oracle& target, const CalibrationModel& calib,
                             const corpus::CodeSnippet& snippet) {
  if (calib.mode != CalibrationMode::kBimodal)
    throw ModeError("bimodal scoring needs a bimodal calibration model");
  if (!snippet.nl) throw InputError("snippet '" + snippet.id + "' has no description");
  const auto own = calib.oracle();
  return {BimodalFormula(ClsVector(target, snippet.code), ClsVector(target, *snippet.nl),
                         ClsVector(own, snippet.code), ClsVector(own, *snippet.nl)),
          ScoreKind::kBimodal};
}

}  // namespace cmi::attack
