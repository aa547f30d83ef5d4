#include "cmi/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/corpus/features.hpp"

namespace cmi::corpus {

namespace {

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::string> OptionalString(const nlohmann::json& obj, const char* key,
                                          const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(source, line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Corpus ParseCorpus(std::istream& in, const std::string& source_name, MembershipLabel role) {
  Corpus corpus;
  corpus.role = role;
  corpus.tag = source_name;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::string> seen;
  std::vector<std::string> duplicates;
  while (std::getline(in, line)) {
    ++lineno;
    if (IsBlank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source_name, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source_name, lineno, "record is not a JSON object");
    auto code = OptionalString(obj, "code", source_name, lineno);
    if (!code || IsBlank(*code)) throw ParseError(source_name, lineno, "record has no code text");

    CodeSnippet s;
    s.code = std::move(*code);
    s.id = OptionalString(obj, "id", source_name, lineno)
               .value_or(source_name + "-" + std::to_string(lineno));
    if (s.id.empty()) throw ParseError(source_name, lineno, "empty id");
    s.nl = OptionalString(obj, "nl", source_name, lineno);
    if (s.nl && IsBlank(*s.nl)) s.nl.reset();
    s.language = ParseLanguage(OptionalString(obj, "language", source_name, lineno).value_or("other"));
    s.source = OptionalString(obj, "source", source_name, lineno).value_or(source_name);
    if (!seen.insert(s.id).second) duplicates.push_back(s.id);
    corpus.snippets.push_back(std::move(s));
  }
  if (!duplicates.empty()) throw DuplicateIdError(std::move(duplicates));
  if (corpus.snippets.empty()) throw EmptyCorpusError("corpus '" + source_name + "' is empty");
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path, MembershipLabel role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return ParseCorpus(in, path.stem().string(), role);
}

void WriteCorpus(const std::filesystem::path& path, std::span<const CodeSnippet> snippets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& s : snippets) {
    nlohmann::json obj = {{"id", s.id},
                          {"code", s.code},
                          {"nl", s.nl ? nlohmann::json(*s.nl) : nlohmann::json(nullptr)},
                          {"language", std::string(ToString(s.language))},
                          {"source", s.source}};
    out << obj.dump() << '\n';
  }
}

std::string_view ToString(Setting setting) {
  switch (setting) {
    case Setting::kWhitebox: return "whitebox";
    case Setting::kGraybox: return "graybox";
    case Setting::kBlackbox: return "blackbox";
  }
  return "whitebox";
}

Setting ParseSetting(std::string_view text) {
  if (text == "whitebox") return Setting::kWhitebox;
  if (text == "graybox") return Setting::kGraybox;
  if (text == "blackbox") return Setting::kBlackbox;
  throw ConfigError("unknown setting '" + std::string(text) + "'");
}

double DefaultKnownFraction(Setting setting) {
  switch (setting) {
    case Setting::kWhitebox: return 0.70;
    case Setting::kGraybox: return 0.05;
    case Setting::kBlackbox: return 0.0;
  }
  return 0.0;
}

SplitSizes SplitSizes::Scaled(int divisor) {
  if (divisor < 1) throw ConfigError("split scale divisor must be positive");
  auto div = [divisor](int n) { return std::max(1, (n + divisor - 1) / divisor); };
  return {div(30000), div(10000), div(500)};
}

std::vector<CodeSnippet> SplitBundle::KnownMembers() const {
  std::vector<CodeSnippet> out;
  for (const auto* set : {&train, &validation})
    for (const auto& ls : *set)
      if (ls.label == MembershipLabel::kMember) out.push_back(ls.snippet);
  return out;
}

namespace {

std::vector<LabeledSnippet> Take(std::span<const CodeSnippet> pool, const std::vector<std::size_t>& order,
                                 std::size_t begin, std::size_t count, MembershipLabel label) {
  std::vector<LabeledSnippet> out;
  out.reserve(count);
  for (std::size_t i = begin; i < begin + count; ++i) out.push_back({pool[order[i]], label});
  return out;
}

void ShuffleSet(std::vector<LabeledSnippet>& set, Rng& rng) {
  const auto perm = Permutation(set.size(), rng);
  std::vector<LabeledSnippet> out;
  out.reserve(set.size());
  for (std::size_t i : perm) out.push_back(std::move(set[i]));
  set = std::move(out);
}

void Append(std::vector<LabeledSnippet>& dst, std::vector<LabeledSnippet> src) {
  for (auto& s : src) dst.push_back(std::move(s));
}

}  // namespace

SplitBundle BuildSplits(std::span<const CodeSnippet> members, std::span<const CodeSnippet> nonmembers,
                        Setting setting, double known_fraction, const SplitSizes& sizes,
                        std::uint64_t seed) {
  if (!(known_fraction >= 0.0 && known_fraction <= 1.0))
    throw ConfigError("known_fraction must lie in [0, 1]");
  if (sizes.train < 0 || sizes.test < 1 || sizes.validation < 1)
    throw ConfigError("split sizes must be positive");
  {
    std::unordered_set<std::string> member_ids;
    for (const auto& s : members) member_ids.insert(s.id);
    for (const auto& s : nonmembers)
      if (member_ids.count(s.id))
        throw ContaminationError("snippet id '" + s.id + "' appears in both member and nonmember data");
  }

  const std::size_t known = static_cast<std::size_t>(std::floor(known_fraction * members.size() + 1e-9));
  const bool blackbox = setting == Setting::kBlackbox;
  const std::size_t train_n = blackbox ? 0 : static_cast<std::size_t>(sizes.train);
  const std::size_t val_n = static_cast<std::size_t>(sizes.validation);
  const std::size_t test_n = static_cast<std::size_t>(sizes.test);

  const std::size_t need_known = blackbox ? 0 : train_n + val_n;
  if (need_known > known) throw SizeError("known member pool too small", need_known, known);
  if (test_n > members.size() - known)
    throw SizeError("unknown member pool too small", test_n, members.size() - known);
  const std::size_t need_non = train_n + val_n + test_n;
  if (need_non > nonmembers.size()) throw SizeError("not enough nonmember snippets", need_non, nonmembers.size());

  Rng rng(DeriveSeed(seed, "split"));
  const auto member_order = Permutation(members.size(), rng);
  const auto non_order = Permutation(nonmembers.size(), rng);

  SplitBundle b;
  b.setting = setting;
  b.known_fraction = known_fraction;
  b.sizes = sizes;
  b.seed = seed;
  for (std::size_t i = 0; i < known; ++i) {
    b.known_member_ids.push_back(members[member_order[i]].id);
    b.known_pool.push_back(members[member_order[i]]);
  }

  if (!blackbox) {
    Append(b.train, Take(members, member_order, 0, train_n, MembershipLabel::kMember));
    Append(b.validation, Take(members, member_order, train_n, val_n, MembershipLabel::kMember));
  }
  Append(b.test, Take(members, member_order, known, test_n, MembershipLabel::kMember));

  Append(b.train, Take(nonmembers, non_order, 0, train_n, MembershipLabel::kNonmember));
  Append(b.validation, Take(nonmembers, non_order, train_n, val_n, MembershipLabel::kNonmember));
  Append(b.test, Take(nonmembers, non_order, train_n + val_n, test_n, MembershipLabel::kNonmember));

  ShuffleSet(b.train, rng);
  ShuffleSet(b.validation, rng);
  ShuffleSet(b.test, rng);
  return b;
}

std::vector<std::string> AuditBundle(const SplitBundle& b, std::span<const CodeSnippet> members) {
  std::vector<std::string> problems;
  std::unordered_map<std::string, std::string> where;
  auto visit = [&](const std::vector<LabeledSnippet>& set, const char* name) {
    for (const auto& ls : set) {
      auto [it, fresh] = where.emplace(ls.snippet.id, name);
      if (!fresh) problems.push_back("id " + ls.snippet.id + " in both " + it->second + " and " + name);
    }
  };
  visit(b.train, "train");
  visit(b.validation, "validation");
  visit(b.test, "test");

  const std::unordered_set<std::string> known(b.known_member_ids.begin(), b.known_member_ids.end());
  const std::size_t expected_known =
      static_cast<std::size_t>(std::floor(b.known_fraction * members.size() + 1e-9));
  if (known.size() != expected_known)
    problems.push_back("known pool has " + std::to_string(known.size()) + " ids, expected " +
                       std::to_string(expected_known));
  std::unordered_set<std::string> member_ids;
  for (const auto& m : members) member_ids.insert(m.id);
  for (const auto& id : known)
    if (!member_ids.count(id)) problems.push_back("known pool id " + id + " is not a member");
  if (b.known_pool.size() != b.known_member_ids.size())
    problems.push_back("known pool snippets and ids differ in count");
  for (const auto& s : b.known_pool)
    if (!known.count(s.id)) problems.push_back("known pool snippet " + s.id + " missing from the id list");

  auto count = [](const std::vector<LabeledSnippet>& set, MembershipLabel l) {
    return std::count_if(set.begin(), set.end(), [l](const auto& s) { return s.label == l; });
  };
  for (const auto* set : {&b.train, &b.validation})
    for (const auto& ls : *set)
      if (ls.label == MembershipLabel::kMember && !known.count(ls.snippet.id))
        problems.push_back("adversary-side member " + ls.snippet.id + " outside the known pool");
  for (const auto& ls : b.test) {
    if (ls.label == MembershipLabel::kMember && known.count(ls.snippet.id))
      problems.push_back("test member " + ls.snippet.id + " comes from the known pool");
    const bool is_member = member_ids.count(ls.snippet.id) > 0;
    if ((ls.label == MembershipLabel::kMember) != is_member)
      problems.push_back("test label of " + ls.snippet.id + " disagrees with its corpus");
  }
  if (b.setting == Setting::kBlackbox) {
    if (!b.train.empty()) problems.push_back("black-box bundle has a train set");
    if (count(b.validation, MembershipLabel::kMember) != 0)
      problems.push_back("black-box validation contains members");
  } else if (count(b.train, MembershipLabel::kMember) != count(b.train, MembershipLabel::kNonmember)) {
    problems.push_back("train mix is unbalanced");
  }
  if (count(b.test, MembershipLabel::kMember) != count(b.test, MembershipLabel::kNonmember))
    problems.push_back("test mix is unbalanced");
  return problems;
}

void WriteSplitManifest(const std::filesystem::path& path, const SplitBundle& bundle) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write split manifest " + path.string());
  auto emit = [&](const std::vector<LabeledSnippet>& set, const char* name) {
    for (const auto& ls : set)
      out << nlohmann::json{{"id", ls.snippet.id}, {"set", name}, {"label", ToInt(ls.label)}}.dump()
          << '\n';
  };
  emit(bundle.train, "train");
  emit(bundle.validation, "validation");
  emit(bundle.test, "test");
}

// ------------------------------------------------------------------ overlap

std::optional<std::string> FunctionName(const CodeSnippet& snippet) {
  static const std::regex python_def(R"(\bdef\s+([A-Za-z_][A-Za-z0-9_]*)\s*\()");
  static const std::regex java_method(
      R"(\b(?:public|private|protected|static|final|\s)*[A-Za-z_<>\[\]]+\s+([A-Za-z_][A-Za-z0-9_]*)\s*\([^)]*\)\s*(?:throws[^{]*)?\{)");
  std::smatch m;
  // Dunder methods such as __init__ say nothing about which function this is.
  std::optional<std::string> first;
  for (std::sregex_iterator it(snippet.code.begin(), snippet.code.end(), python_def), end; it != end;
       ++it) {
    std::string name = (*it)[1].str();
    const bool dunder = name.size() > 4 && name.starts_with("__") && name.ends_with("__");
    if (!dunder) return name;
    if (!first) first = std::move(name);
  }
  if (first) return first;
  if (std::regex_search(snippet.code, m, java_method)) return m[1].str();
  return std::nullopt;
}

namespace {

struct Interned {
  std::vector<int> tokens;  // sorted, unique
  std::optional<std::string> name;
};

double Jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace

double TokenJaccard(std::string_view a, std::string_view b) {
  LexicalTokenizer lexer;
  std::map<std::string, int> ids;
  auto intern = [&](std::string_view text) {
    std::set<int> out;
    for (auto& t : lexer.Tokenize(text)) out.insert(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return std::vector<int>(out.begin(), out.end());
  };
  const auto ta = intern(a);
  const auto tb = intern(b);
  return Jaccard(ta, tb);
}

OverlapReport CheckNoOverlap(std::span<const CodeSnippet> members,
                             std::span<const CodeSnippet> nonmembers, double cutoff) {
  LexicalTokenizer lexer;
  std::unordered_map<std::string, int> ids;
  auto intern = [&](const CodeSnippet& s) {
    Interned out;
    std::set<int> uniq;
    for (auto& t : lexer.Tokenize(s.code))
      uniq.insert(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    out.tokens.assign(uniq.begin(), uniq.end());
    out.name = FunctionName(s);
    return out;
  };
  std::vector<Interned> left, right;
  for (const auto& s : members) left.push_back(intern(s));
  for (const auto& s : nonmembers) right.push_back(intern(s));

  OverlapReport report;
  for (std::size_t i = 0; i < left.size(); ++i) {
    for (std::size_t j = 0; j < right.size(); ++j) {
      const bool name_match = left[i].name && right[j].name && *left[i].name == *right[j].name;
      const double sim = Jaccard(left[i].tokens, right[j].tokens);
      if (name_match || sim > cutoff)
        report.pairs.push_back({members[i].id, nonmembers[j].id, sim, name_match});
    }
  }
  return report;
}

}  // namespace cmi::corpus
