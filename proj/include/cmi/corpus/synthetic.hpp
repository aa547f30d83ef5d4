#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "cmi/corpus/snippet.hpp"

namespace cmi::corpus {

// Vocabulary and habits of one synthetic code source. Two sources with
// overlapping but distinct pools stand in for two independent code
// datasets: one the target trains on, one it never sees.
struct SourceStyle {
  std::string name;
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;
  std::vector<std::string> attributes;
  std::vector<std::string> adjectives;
  std::vector<std::string> accumulators;
  std::vector<std::string> nl_openers;
  std::vector<double> template_weights;
};

SourceStyle HubStyle();
SourceStyle ForgeStyle();

// Generates `count` Python functions with descriptions. Function names are
// unique against (and recorded into) `used_names`.
std::vector<CodeSnippet> GenerateSnippets(const SourceStyle& style, int count, std::uint64_t seed,
                                          std::unordered_set<std::string>& used_names);

struct SyntheticBenchmark {
  Corpus members;
  Corpus nonmembers;
};

// Member corpus from the hub style, nonmember corpus from the forge style,
// with globally unique function names.
SyntheticBenchmark GenerateBenchmark(int members, int nonmembers, std::uint64_t seed);

}  // namespace cmi::corpus
