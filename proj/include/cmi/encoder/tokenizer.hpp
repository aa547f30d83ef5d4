#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmi/corpus/snippet.hpp"

namespace cmi::encoder {

// Reserved ids; learned vocabulary starts after them.
enum SpecialToken : int { kPad = 0, kCls = 1, kSep = 2, kEos = 3, kMask = 4 };
inline constexpr int kNumSpecialTokens = 5;
inline constexpr int kByteBase = kNumSpecialTokens;       // ids 5..260 are raw bytes
inline constexpr int kFirstMergeId = kByteBase + 256;     // 261
inline constexpr int kMinVocabSize = kFirstMergeId;

// Splits text into pre-tokens: word runs, punctuation runs and whitespace
// runs. A single space directly before a word or punctuation run is glued to
// it. Concatenating the pieces gives back the input.
std::vector<std::string> PreTokenize(std::string_view text);

// Case-sensitive byte-level BPE. Every byte string is encodable and
// Detokenize(Tokenize(s)) == s exactly.
class Tokenizer {
 public:
  // Learns merges until the vocabulary holds `vocab_size` ids or no pair
  // occurs at least twice. Deterministic for a fixed corpus order.
  static Tokenizer Train(std::span<const corpus::CodeSnippet> corpus, int vocab_size);

  std::vector<int> Tokenize(std::string_view text) const;
  std::string Detokenize(std::span<const int> ids) const;  // drops special tokens

  // Unimodal: [CLS] code [EOS]. Bimodal: [CLS] nl [SEP] code [EOS].
  // Output never exceeds max_positions; the NL part gives up room first,
  // then code is cut from its tail. The closing [EOS] is always kept.
  std::vector<int> EncodeInput(std::string_view code, const std::optional<std::string>& nl,
                               int max_positions) const;

  int vocab_size() const { return kFirstMergeId + static_cast<int>(merges_.size()); }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }
  const std::string& token_bytes(int id) const { return tokens_.at(id); }

  // Writes vocab.txt and merges.txt into `dir`.
  void Save(const std::filesystem::path& dir) const;
  static Tokenizer Load(const std::filesystem::path& dir);

  bool operator==(const Tokenizer& other) const { return merges_ == other.merges_; }

 private:
  Tokenizer();
  void AddMerge(int left, int right);
  void EncodeWord(std::string_view word, std::vector<int>& out) const;

  std::vector<std::pair<int, int>> merges_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::uint64_t, int> merge_rank_;
};

}  // namespace cmi::encoder
