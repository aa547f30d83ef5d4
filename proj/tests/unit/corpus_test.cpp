#include "cmi/corpus/corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cmi/common/error.hpp"
#include "cmi/corpus/synthetic.hpp"

namespace cmi::corpus {
namespace {

std::vector<CodeSnippet> MakeSnippets(const std::string& prefix, int n) {
  std::vector<CodeSnippet> out;
  for (int i = 0; i < n; ++i)
    out.push_back({prefix + std::to_string(i), "def " + prefix + std::to_string(i) + "(x): return x",
                   std::nullopt, Language::kPython, prefix});
  return out;
}

Corpus Parse(const std::string& text, MembershipLabel role = MembershipLabel::kMember) {
  std::istringstream in(text);
  return ParseCorpus(in, "mem", role);
}

TEST(ParseCorpusTest, KeepsEveryValidRecord) {
  const auto c = Parse(
      R"({"id": "a", "code": "def f(): pass", "nl": "does f", "language": "python"})"
      "\n"
      R"({"code": "int g() { return 1; }", "language": "java"})"
      "\n"
      R"({"id": "c", "code": "x = 1", "nl": "   "})"
      "\n");
  ASSERT_EQ(c.snippets.size(), 3u);
  EXPECT_EQ(c.role, MembershipLabel::kMember);
  EXPECT_EQ(c.snippets[0].nl, "does f");
  EXPECT_EQ(c.snippets[0].language, Language::kPython);
  EXPECT_EQ(c.snippets[1].id, "mem-2");
  EXPECT_EQ(c.snippets[1].language, Language::kJava);
  EXPECT_FALSE(c.snippets[2].nl.has_value());
  EXPECT_EQ(c.snippets[2].source, "mem");
}

TEST(ParseCorpusTest, EmptyCodeIsAParseErrorAtItsLine) {
  try {
    Parse(R"({"id": "a", "code": "x"})"
          "\n"
          R"({"id": "b", "code": "  "})"
          "\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(Parse("{not json}\n"), ParseError);
  EXPECT_THROW(Parse(R"({"id": "a"})"), ParseError);
}

TEST(ParseCorpusTest, DuplicateIdsAreListed) {
  try {
    Parse(R"({"id": "a", "code": "x"})"
          "\n"
          R"({"id": "a", "code": "y"})"
          "\n");
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& e) {
    EXPECT_EQ(e.ids(), std::vector<std::string>{"a"});
  }
}

TEST(ParseCorpusTest, EmptyInputIsRejected) {
  EXPECT_THROW(Parse(""), EmptyCorpusError);
  EXPECT_THROW(Parse("\n\n"), EmptyCorpusError);
}

TEST(LoadCorpusTest, RoundTripsThroughWriteCorpus) {
  const auto path = std::filesystem::temp_directory_path() / "cmi_corpus_roundtrip.jsonl";
  auto snippets = MakeSnippets("m", 5);
  snippets[2].nl = "describe me";
  WriteCorpus(path, snippets);
  const auto c = LoadCorpus(path, MembershipLabel::kNonmember);
  EXPECT_EQ(c.role, MembershipLabel::kNonmember);
  ASSERT_EQ(c.snippets.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(c.snippets[i].id, snippets[i].id);
    EXPECT_EQ(c.snippets[i].code, snippets[i].code);
    EXPECT_EQ(c.snippets[i].nl, snippets[i].nl);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(LoadCorpus(path, MembershipLabel::kMember), IoError);
}

TEST(SplitSizesTest, ScaledFromReferenceCounts) {
  EXPECT_EQ(SplitSizes::Scaled(1), (SplitSizes{30000, 10000, 500}));
  EXPECT_EQ(SplitSizes::Scaled(750), (SplitSizes{40, 14, 1}));
  EXPECT_THROW(SplitSizes::Scaled(0), ConfigError);
}

TEST(BuildSplitsTest, GrayboxBundleDrawsTrainMembersFromKnownPool) {
  const auto members = MakeSnippets("m", 1000);
  const auto nonmembers = MakeSnippets("n", 1000);
  const auto b = BuildSplits(members, nonmembers, Setting::kGraybox, 0.05, {40, 20, 10}, 7);
  EXPECT_EQ(b.train.size(), 80u);
  EXPECT_EQ(b.test.size(), 40u);
  EXPECT_EQ(b.validation.size(), 20u);
  EXPECT_EQ(b.known_member_ids.size(), 50u);
  ASSERT_EQ(b.known_pool.size(), 50u);
  const std::unordered_set<std::string> known(b.known_member_ids.begin(), b.known_member_ids.end());
  for (const auto* set : {&b.train, &b.validation})
    for (const auto& ls : *set)
      if (ls.label == MembershipLabel::kMember) EXPECT_TRUE(known.count(ls.snippet.id));
  for (const auto& ls : b.test)
    if (ls.label == MembershipLabel::kMember) EXPECT_FALSE(known.count(ls.snippet.id));
  EXPECT_EQ(b.KnownMembers().size(), 50u);
  EXPECT_TRUE(AuditBundle(b, members).empty());
}

TEST(BuildSplitsTest, BlackboxHasNoTrainSetAndNonmemberValidation) {
  const auto members = MakeSnippets("m", 100);
  const auto nonmembers = MakeSnippets("n", 100);
  const auto b = BuildSplits(members, nonmembers, Setting::kBlackbox, 0.0, {40, 20, 10}, 1);
  EXPECT_TRUE(b.train.empty());
  EXPECT_EQ(b.validation.size(), 10u);
  for (const auto& ls : b.validation) EXPECT_EQ(ls.label, MembershipLabel::kNonmember);
  EXPECT_EQ(b.test.size(), 40u);
  EXPECT_TRUE(AuditBundle(b, members).empty());
}

TEST(BuildSplitsTest, SameSeedGivesSameBundle) {
  const auto members = MakeSnippets("m", 300);
  const auto nonmembers = MakeSnippets("n", 300);
  auto ids = [](const SplitBundle& b) {
    std::vector<std::string> out;
    for (const auto* set : {&b.train, &b.validation, &b.test})
      for (const auto& ls : *set) out.push_back(ls.snippet.id);
    return out;
  };
  const auto a = BuildSplits(members, nonmembers, Setting::kWhitebox, 0.7, {40, 20, 10}, 5);
  const auto b = BuildSplits(members, nonmembers, Setting::kWhitebox, 0.7, {40, 20, 10}, 5);
  const auto c = BuildSplits(members, nonmembers, Setting::kWhitebox, 0.7, {40, 20, 10}, 6);
  EXPECT_EQ(ids(a), ids(b));
  EXPECT_EQ(a.known_member_ids, b.known_member_ids);
  EXPECT_NE(ids(a), ids(c));
}

TEST(BuildSplitsTest, RejectsSharedIdsAndShortPools) {
  const auto members = MakeSnippets("m", 100);
  auto nonmembers = MakeSnippets("n", 100);
  EXPECT_THROW(BuildSplits(members, nonmembers, Setting::kGraybox, 0.05, {40, 20, 10}, 1), SizeError);
  EXPECT_THROW(BuildSplits(members, nonmembers, Setting::kWhitebox, 0.95, {40, 20, 10}, 1), SizeError);
  EXPECT_THROW(BuildSplits(members, nonmembers, Setting::kWhitebox, 1.5, {40, 20, 10}, 1), ConfigError);
  nonmembers[3].id = members[10].id;
  EXPECT_THROW(BuildSplits(members, nonmembers, Setting::kWhitebox, 0.7, {20, 10, 5}, 1),
               ContaminationError);
}

TEST(AuditBundleTest, ReportsTamperedBundles) {
  const auto members = MakeSnippets("m", 200);
  const auto nonmembers = MakeSnippets("n", 200);
  auto b = BuildSplits(members, nonmembers, Setting::kWhitebox, 0.7, {20, 10, 5}, 2);
  ASSERT_TRUE(AuditBundle(b, members).empty());
  auto leaked = b;
  leaked.test.push_back(leaked.train.front());
  EXPECT_FALSE(AuditBundle(leaked, members).empty());
  auto shifted = b;
  shifted.known_member_ids.pop_back();
  EXPECT_FALSE(AuditBundle(shifted, members).empty());
}

TEST(OverlapTest, IdenticalSnippetIsReported) {
  const CodeSnippet a{"a", "def alpha(x): return x + 1", {}, Language::kPython, "s"};
  CodeSnippet b = a;
  b.id = "b";
  const auto report = CheckNoOverlap(std::vector{a}, std::vector{b});
  ASSERT_EQ(report.pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(report.pairs[0].similarity, 1.0);
  EXPECT_TRUE(report.pairs[0].name_match);
}

TEST(OverlapTest, DisjointSnippetsAreClean) {
  const CodeSnippet a{"a", "alpha beta gamma", {}, Language::kOther, "s"};
  const CodeSnippet b{"b", "delta epsilon zeta", {}, Language::kOther, "s"};
  EXPECT_TRUE(CheckNoOverlap(std::vector{a}, std::vector{b}).clean());
  EXPECT_DOUBLE_EQ(TokenJaccard(a.code, b.code), 0.0);
}

TEST(OverlapTest, NineOfTenSharedTokensStaysBelowCutoff) {
  const std::string a = "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9";
  const std::string b = "t0 t1 t2 t3 t4 t5 t6 t7 t8 u9";
  EXPECT_NEAR(TokenJaccard(a, b), 9.0 / 11.0, 1e-12);
  const CodeSnippet ma{"a", a, {}, Language::kOther, "s"};
  const CodeSnippet nb{"b", b, {}, Language::kOther, "s"};
  EXPECT_TRUE(CheckNoOverlap(std::vector{ma}, std::vector{nb}).clean());
}

TEST(OverlapTest, SymmetricAtPairLevel) {
  const auto bench = GenerateBenchmark(30, 30, 3);
  auto left = bench.members.snippets;
  left.push_back(bench.nonmembers.snippets[4]);
  left.back().id = "copy";
  const auto forward = CheckNoOverlap(left, bench.nonmembers.snippets);
  const auto backward = CheckNoOverlap(bench.nonmembers.snippets, left);
  ASSERT_EQ(forward.pairs.size(), backward.pairs.size());
  for (std::size_t i = 0; i < forward.pairs.size(); ++i) {
    bool found = false;
    for (const auto& p : backward.pairs)
      found |= p.member_id == forward.pairs[i].nonmember_id && p.nonmember_id == forward.pairs[i].member_id;
    EXPECT_TRUE(found);
  }
}

TEST(FunctionNameTest, PythonAndJava) {
  EXPECT_EQ(FunctionName({"a", "def load_rows(path):\n    pass", {}, Language::kPython, ""}), "load_rows");
  EXPECT_EQ(FunctionName({"b", "public static int countItems(List<Item> xs) { return 0; }", {},
                          Language::kJava, ""}),
            "countItems");
  EXPECT_FALSE(FunctionName({"c", "x = 1", {}, Language::kPython, ""}).has_value());
  EXPECT_EQ(FunctionName({"d", "class Box:\n    def __init__(self):\n        pass\n    def area(self):\n        return 0",
                          {}, Language::kPython, ""}),
            "area");
}

TEST(SyntheticTest, SourcesAreDisjointAndDescribed) {
  const auto bench = GenerateBenchmark(400, 400, 9);
  EXPECT_EQ(bench.members.snippets.size(), 400u);
  EXPECT_EQ(bench.nonmembers.role, MembershipLabel::kNonmember);
  std::unordered_set<std::string> names;
  for (const auto* c : {&bench.members, &bench.nonmembers})
    for (const auto& s : c->snippets) {
      ASSERT_TRUE(s.nl.has_value());
      const auto name = FunctionName(s);
      ASSERT_TRUE(name.has_value()) << s.code;
      EXPECT_TRUE(names.insert(*name).second) << *name;
    }
  EXPECT_TRUE(CheckNoOverlap(bench.members.snippets, bench.nonmembers.snippets).clean());
}

TEST(SyntheticTest, DeterministicForSeed) {
  const auto a = GenerateBenchmark(50, 50, 4);
  const auto b = GenerateBenchmark(50, 50, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(a.members.snippets[i].code, b.members.snippets[i].code);
    EXPECT_EQ(a.nonmembers.snippets[i].nl, b.nonmembers.snippets[i].nl);
  }
}

}  // namespace
}  // namespace cmi::corpus
