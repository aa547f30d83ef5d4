#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmi/corpus/snippet.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/oracle.hpp"
#include "cmi/encoder/pretrain.hpp"
#include "cmi/encoder/tokenizer.hpp"

namespace cmi::attack {

// Full-string ASCII case mapping; other bytes are untouched.
std::pair<std::string, std::string> CasePerturb(std::string_view code);

// Row 0 ([CLS]) of the last layer.
std::vector<float> ClsVector(const encoder::Oracle& oracle, std::string_view code,
                             const std::optional<std::string>& nl = std::nullopt);

enum class CalibrationMode { kUnimodal, kBimodal };

std::string_view ToString(CalibrationMode mode);

// Reference encoder trained only on nonmember data, with its own tokenizer.
struct CalibrationModel {
  encoder::Tokenizer tokenizer;
  encoder::EncoderModel encoder;
  CalibrationMode mode = CalibrationMode::kUnimodal;
  std::string training_corpus_tag;
  std::vector<double> loss_trace;

  encoder::Oracle oracle() const {
    return encoder::Oracle(encoder::AccessLevel::kWhite, encoder, tokenizer);
  }
};

struct CalibrationConfig {
  encoder::EncoderConfig model;
  encoder::PretrainConfig training;
  int vocab_size = 4096;
};

// Masked-LM training on nonmembers. Unimodal mode trains on code alone and
// rejects a bimodal layout request; bimodal mode trains on [CLS] nl [SEP]
// code [EOS] pairs only. Member corpora raise ContaminationError.
CalibrationModel TrainCalibration(const corpus::Corpus& nonmembers, CalibrationMode mode,
                                  const CalibrationConfig& config);

enum class ScoreKind { kUnimodal, kBimodal };

struct CalibratedScore {
  double value = 0.0;  // as defined by the formula, sign included
  ScoreKind kind = ScoreKind::kUnimodal;

  // Larger means more member-like for both kinds.
  double MemberOriented() const { return kind == ScoreKind::kBimodal ? -value : value; }
};

// ||a - b|| of the target minus ||c - d|| of the calibration model.
double UnimodalFormula(std::span<const float> target_lower, std::span<const float> target_upper,
                       std::span<const float> calib_lower, std::span<const float> calib_upper);
double BimodalFormula(std::span<const float> target_code, std::span<const float> target_nl,
                      std::span<const float> calib_code, std::span<const float> calib_nl);

CalibratedScore UnimodalScore(const encoder::Oracle& target, const CalibrationModel& calib,
                              const corpus::CodeSnippet& snippet);
// Code and description are encoded in separate passes. Throws InputError
// when the snippet has no description.
CalibratedScore BimodalScore(const encoder::Oracle& target, const CalibrationModel& calib,
                             const corpus::CodeSnippet& snippet);

}  // namespace cmi::attack
