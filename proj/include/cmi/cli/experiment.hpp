#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmi/attack/blackbox.hpp"
#include "cmi/attack/graybox.hpp"
#include "cmi/cli/config.hpp"
#include "cmi/corpus/corpus.hpp"
#include "cmi/encoder/model.hpp"
#include "cmi/encoder/tokenizer.hpp"
#include "cmi/eval/report.hpp"

namespace cmi::cli {

// The model under attack plus its tokenizer.
struct Target {
  encoder::Tokenizer tokenizer;
  encoder::EncoderModel model;
  std::vector<double> loss_trace;
};

Target TrainTarget(const corpus::Corpus& members, const ExperimentConfig& config);
// Writes model.bin, vocab.txt and merges.txt into `dir`.
std::vector<std::filesystem::path> SaveTarget(const Target& target, const std::filesystem::path& dir);
Target LoadTarget(const std::filesystem::path& dir);

// Expensive adversary-side models, reusable across attacks on one bundle.
struct ArtifactCache {
  std::map<std::string, attack::ShadowModel> shadows;  // keyed by kd loss and split seed
  std::optional<attack::CalibrationModel> unimodal;
  std::optional<attack::CalibrationModel> bimodal;
};

struct AttackRun {
  eval::AttackReport report;
  std::vector<eval::ScoredExample> test;
  std::vector<eval::ScoredExample> validation;
  std::vector<double> raw_test_scores;  // black-box formula values before orientation
};

// Cheap checks that must fail before any training starts.
void ValidateInputs(const ExperimentConfig& config, const corpus::Corpus& members,
                    const corpus::Corpus& nonmembers);

std::map<std::string, std::uint64_t> SubSeeds(std::uint64_t root);

AttackRun RunAttack(const ExperimentConfig& config, const corpus::Corpus& members,
                    const corpus::Corpus& nonmembers, const Target& target,
                    ArtifactCache* cache = nullptr);

std::string Sha256File(const std::filesystem::path& path);

// Records emitted files with their hashes.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}
  void Add(const std::filesystem::path& file);
  // Writes manifest.json under the root.
  std::filesystem::path Write(const nlohmann::json& extra) const;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

// End to end: load corpora, obtain the target, run the attack and persist
// the report, score dumps, interval CSV and manifest under output_dir.
eval::AttackReport RunExperiment(const ExperimentConfig& config);

enum class SweepAxis { kKnownFraction, kKdLoss, kLayerSelection };
SweepAxis ParseSweepAxis(std::string_view text);
std::string_view ToString(SweepAxis axis);

// One report per value, each in its own subdirectory, plus summary.csv.
std::vector<eval::AttackReport> RunSweep(const ExperimentConfig& base, SweepAxis axis,
                                         const std::vector<std::string>& values);

}  // namespace cmi::cli
