#include "cmi/corpus/features.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "cmi/common/error.hpp"

namespace cmi::corpus {
namespace {

TEST(LexicalTokenizerTest, SplitsIdentifiersOperatorsAndLiterals) {
  const LexicalTokenizer lex;
  EXPECT_EQ(lex.Tokenize("if x: return y"),
            (std::vector<std::string>{"if", "x", ":", "return", "y"}));
  EXPECT_EQ(lex.Tokenize("a += 'b c' # note\nd == 3.5"),
            (std::vector<std::string>{"a", "+=", "'b c'", "d", "==", "3.5"}));
  EXPECT_EQ(lex.Tokenize("x // comment\n"), (std::vector<std::string>{"x"}));
}

TEST(ExtractFeaturesTest, CountsReservedWordOccurrences) {
  const LexicalTokenizer lex;
  const CodeSnippet s{"s", "if x: return y", {}, Language::kPython, ""};
  const auto tfidf = FitTfIdf(std::vector{s}, lex);
  const auto f = ExtractFeatures(s, lex, PythonReservedWords(), tfidf);
  EXPECT_EQ(f.code_length, 5);
  EXPECT_EQ(f.reserved_word_count, 2);

  const CodeSnippet repeated{"r", "if a: pass\nif b: pass", {}, Language::kPython, ""};
  EXPECT_EQ(ExtractFeatures(repeated, lex, PythonReservedWords(), tfidf).reserved_word_count, 4);
}

TEST(ExtractFeaturesTest, JavaReservedWords) {
  const LexicalTokenizer lex;
  const CodeSnippet s{"j", "public int f() { for (;;) { return 1; } }", {}, Language::kJava, ""};
  const auto tfidf = FitTfIdf(std::vector{s}, lex);
  EXPECT_EQ(ExtractFeatures(s, lex, ReservedWords(Language::kJava), tfidf).reserved_word_count, 4);
}

TEST(ExtractFeaturesTest, NeedsAFittedModel) {
  const LexicalTokenizer lex;
  const CodeSnippet s{"s", "x", {}, Language::kPython, ""};
  EXPECT_THROW(ExtractFeatures(s, lex, PythonReservedWords(), TfIdfModel{}), StateError);
}

TEST(ExtractFeaturesTest, IsPure) {
  const LexicalTokenizer lex;
  const std::vector<CodeSnippet> ref = {{"a", "def f(x): return x * 2", {}, Language::kPython, ""},
                                        {"b", "def g(y): return y", {}, Language::kPython, ""}};
  const auto tfidf = FitTfIdf(ref, lex);
  EXPECT_EQ(ExtractFeatures(ref[0], lex, PythonReservedWords(), tfidf),
            ExtractFeatures(ref[0], lex, PythonReservedWords(), tfidf));
}

// Two documents {"a b", "a c"} with tf = count/|d| and
// idf = ln((1+N)/(1+df)) + 1.
TEST(TfIdfTest, HandComputedTwoDocumentCorpus) {
  TfIdfModel model;
  const std::vector<std::vector<std::string>> docs = {{"a", "b"}, {"a", "c"}};
  model.Fit(docs);
  const double idf_a = std::log(3.0 / 3.0) + 1.0;
  const double idf_b = std::log(3.0 / 2.0) + 1.0;
  EXPECT_DOUBLE_EQ(model.Idf("a"), idf_a);
  EXPECT_DOUBLE_EQ(model.Idf("b"), idf_b);
  EXPECT_DOUBLE_EQ(model.TfIdf("a", docs[0]), 0.5 * idf_a);
  EXPECT_DOUBLE_EQ(model.TfIdf("b", docs[0]), 0.5 * idf_b);
  EXPECT_GT(model.TfIdf("b", docs[0]), model.TfIdf("a", docs[0]));
  EXPECT_DOUBLE_EQ(model.AverageTfIdf(docs[0]), 0.25 * (idf_a + idf_b));
}

TEST(TfIdfTest, UnknownTokensScoreZero) {
  TfIdfModel model;
  model.Fit({{"a"}});
  const std::vector<std::string> doc = {"zzz", "yyy"};
  EXPECT_EQ(model.TfIdf("zzz", doc), 0.0);
  EXPECT_EQ(model.AverageTfIdf(doc), 0.0);
  EXPECT_THROW(TfIdfModel{}.Idf("a"), StateError);
}

}  // namespace
}  // namespace cmi::corpus
