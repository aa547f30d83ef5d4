#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cmi/corpus/snippet.hpp"

namespace cmi::corpus {

// Lexical code tokens: identifiers/keywords, numbers, string literals and
// operators. Whitespace and `#` / `//` line comments are skipped.
class LexicalTokenizer {
 public:
  std::vector<std::string> Tokenize(std::string_view code) const;
};

const std::set<std::string>& PythonReservedWords();
const std::set<std::string>& JavaReservedWords();
const std::set<std::string>& ReservedWords(Language language);

// TF-IDF with
//   tf(t, d)  = count(t, d) / |d|
//   idf(t)    = ln((1 + N) / (1 + df(t))) + 1
// Tokens never seen during Fit score 0.
class TfIdfModel {
 public:
  void Fit(const std::vector<std::vector<std::string>>& documents);
  bool fitted() const { return fitted_; }
  std::size_t num_documents() const { return num_documents_; }
  bool Contains(const std::string& token) const { return df_.count(token) > 0; }

  double Idf(const std::string& token) const;
  double TfIdf(const std::string& token, const std::vector<std::string>& document) const;
  // Mean TF-IDF over the token occurrences of `document`.
  double AverageTfIdf(const std::vector<std::string>& document) const;

 private:
  bool fitted_ = false;
  std::size_t num_documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

struct CodeFeatures {
  std::int64_t code_length = 0;
  std::int64_t reserved_word_count = 0;  // occurrences, not distinct words
  double avg_tfidf = 0.0;
  bool operator==(const CodeFeatures&) const = default;
};

CodeFeatures ExtractFeatures(const CodeSnippet& snippet, const LexicalTokenizer& tokenizer,
                             const std::set<std::string>& reserved_words, const TfIdfModel& tfidf);

// Fits a TF-IDF model on the lexical tokens of `reference`.
TfIdfModel FitTfIdf(std::span<const CodeSnippet> reference, const LexicalTokenizer& tokenizer);

}  // namespace cmi::corpus
