#include "cmi/corpus/features.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "cmi/common/error.hpp"

namespace cmi::corpus {

namespace {

bool IsIdentStart(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool IsIdentChar(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 24> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=",  "%=",  "->",  "**",  "//",  "&&", "||", "<<", ">>", "++", "--", "::"};

}  // namespace

std::vector<std::string> LexicalTokenizer::Tokenize(std::string_view code) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(code[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < n && code[i + 1] == '/')) {
      while (i < n && code[i] != '\n') ++i;
      continue;
    }
    if (IsIdentStart(c)) {
      std::size_t j = i + 1;
      while (j < n && IsIdentChar(static_cast<unsigned char>(code[j]))) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(c)) {
      std::size_t j = i + 1;
      while (j < n && (std::isalnum(static_cast<unsigned char>(code[j])) || code[j] == '.')) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && code[j] != static_cast<char>(c) && code[j] != '\n') {
        if (code[j] == '\\' && j + 1 < n) ++j;
        ++j;
      }
      if (j < n && code[j] == static_cast<char>(c)) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
      continue;
    }
    bool matched = false;
    for (auto op : kOperators) {
      if (code.substr(i, op.size()) == op) {
        out.emplace_back(op);
        i += op.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.emplace_back(1, static_cast<char>(c)), ++i;
  }
  return out;
}

const std::set<std::string>& PythonReservedWords() {
  static const std::set<std::string> words = {
      "False", "None",   "True",    "and",      "as",       "assert", "async", "await",
      "break", "class",  "continue", "def",     "del",      "elif",   "else",  "except",
      "finally", "for",  "from",    "global",   "if",       "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",       "pass",     "raise",  "return", "try",
      "while", "with",   "yield"};
  return words;
}

const std::set<std::string>& JavaReservedWords() {
  static const std::set<std::string> words = {
      "abstract", "assert",    "boolean",  "break",      "byte",       "case",     "catch",
      "char",     "class",     "const",    "continue",   "default",    "do",       "double",
      "else",     "enum",      "extends",  "final",      "finally",    "float",    "for",
      "goto",     "if",        "implements", "import",   "instanceof", "int",      "interface",
      "long",     "native",    "new",      "package",    "private",    "protected", "public",
      "return",   "short",     "static",   "strictfp",   "super",      "switch",   "synchronized",
      "this",     "throw",     "throws",   "transient",  "try",        "void",     "volatile",
      "while",    "true",      "false",    "null"};
  return words;
}

const std::set<std::string>& ReservedWords(Language language) {
  return language == Language::kJava ? JavaReservedWords() : PythonReservedWords();
}

void TfIdfModel::Fit(const std::vector<std::vector<std::string>>& documents) {
  df_.clear();
  num_documents_ = documents.size();
  for (const auto& doc : documents) {
    std::unordered_set<std::string> uniq(doc.begin(), doc.end());
    for (const auto& t : uniq) ++df_[t];
  }
  fitted_ = true;
}

double TfIdfModel::Idf(const std::string& token) const {
  if (!fitted_) throw StateError("TF-IDF model used before Fit");
  auto it = df_.find(token);
  if (it == df_.end()) return 0.0;
  return std::log((1.0 + static_cast<double>(num_documents_)) / (1.0 + static_cast<double>(it->second))) + 1.0;
}

double TfIdfModel::TfIdf(const std::string& token, const std::vector<std::string>& document) const {
  if (!fitted_) throw StateError("TF-IDF model used before Fit");
  if (document.empty()) return 0.0;
  std::size_t count = 0;
  for (const auto& t : document) count += (t == token);
  return static_cast<double>(count) / static_cast<double>(document.size()) * Idf(token);
}

double TfIdfModel::AverageTfIdf(const std::vector<std::string>& document) const {
  if (!fitted_) throw StateError("TF-IDF model used before Fit");
  if (document.empty()) return 0.0;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : document) ++counts[t];
  const double len = static_cast<double>(document.size());
  double total = 0.0;
  for (const auto& t : document) total += static_cast<double>(counts[t]) / len * Idf(t);
  return total / len;
}

CodeFeatures ExtractFeatures(const CodeSnippet& snippet, const LexicalTokenizer& tokenizer,
                             const std::set<std::string>& reserved_words, const TfIdfModel& tfidf) {
  if (!tfidf.fitted()) throw StateError("feature extraction needs a fitted TF-IDF model");
  const auto tokens = tokenizer.Tokenize(snippet.code);
  CodeFeatures f;
  f.code_length = static_cast<std::int64_t>(tokens.size());
  for (const auto& t : tokens) f.reserved_word_count += reserved_words.count(t);
  f.avg_tfidf = tfidf.AverageTfIdf(tokens);
  return f;
}

TfIdfModel FitTfIdf(std::span<const CodeSnippet> reference, const LexicalTokenizer& tokenizer) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(reference.size());
  for (const auto& s : reference) docs.push_back(tokenizer.Tokenize(s.code));
  TfIdfModel model;
  model.Fit(docs);
  return model;
}

}  // namespace cmi::corpus
