#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmi/corpus/snippet.hpp"

namespace cmi::corpus {

// JSONL corpus: one object per line with keys id, code, nl, language,
// source. Only `code` is required; a missing id becomes "<stem>-<line>",
// a missing source becomes the file stem, whitespace-only nl is dropped.
Corpus LoadCorpus(const std::filesystem::path& path, MembershipLabel role);
Corpus ParseCorpus(std::istream& in, const std::string& source_name, MembershipLabel role);
void WriteCorpus(const std::filesystem::path& path, std::span<const CodeSnippet> snippets);

enum class Setting { kWhitebox, kGraybox, kBlackbox };

std::string_view ToString(Setting setting);
Setting ParseSetting(std::string_view text);
// 0.70 white-box, 0.05 gray-box, 0 black-box.
double DefaultKnownFraction(Setting setting);

struct LabeledSnippet {
  CodeSnippet snippet;
  MembershipLabel label;
};

// Per-class set sizes. The reference protocol uses 30,000 train, 10,000
// test and 500 validation snippets per class.
struct SplitSizes {
  int train = 40;
  int test = 20;
  int validation = 10;

  // Reference sizes divided by `divisor` (rounded up, at least 1).
  static SplitSizes Scaled(int divisor);
  bool operator==(const SplitSizes&) const = default;
};

struct SplitBundle {
  Setting setting = Setting::kWhitebox;
  double known_fraction = 0.0;
  SplitSizes sizes;
  std::uint64_t seed = 0;
  std::vector<LabeledSnippet> train;
  std::vector<LabeledSnippet> validation;
  std::vector<LabeledSnippet> test;
  std::vector<std::string> known_member_ids;  // the adversary's member pool
  std::vector<CodeSnippet> known_pool;        // same pool, full snippets

  // Known-member snippets inside train and validation.
  std::vector<CodeSnippet> KnownMembers() const;
};

// Builds the train/validation/test mixes. Members are shuffled and the first
// floor(known_fraction * |members|) form the known pool; train and
// validation members come from it, test members from the rest. Black-box
// bundles have no train set and a nonmember-only validation set.
SplitBundle BuildSplits(std::span<const CodeSnippet> members, std::span<const CodeSnippet> nonmembers,
                        Setting setting, double known_fraction, const SplitSizes& sizes,
                        std::uint64_t seed);

// Lists every invariant the bundle breaks (empty when sound).
std::vector<std::string> AuditBundle(const SplitBundle& bundle,
                                     std::span<const CodeSnippet> members);

// JSONL lines {"id":..., "set":"train|validation|test", "label":1|0}.
void WriteSplitManifest(const std::filesystem::path& path, const SplitBundle& bundle);

struct OverlapPair {
  std::string member_id;
  std::string nonmember_id;
  double similarity = 0.0;  // token-set Jaccard
  bool name_match = false;
};

struct OverlapReport {
  std::vector<OverlapPair> pairs;
  bool clean() const { return pairs.empty(); }
};

// Flags pairs with the same function name or token-set Jaccard similarity
// above `cutoff`.
OverlapReport CheckNoOverlap(std::span<const CodeSnippet> members,
                             std::span<const CodeSnippet> nonmembers, double cutoff = 0.9);

double TokenJaccard(std::string_view a, std::string_view b);
std::optional<std::string> FunctionName(const CodeSnippet& snippet);

}  // namespace cmi::corpus
