#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cmi::corpus {

enum class Language { kPython, kJava, kOther };

// Serialised as 1 (member) / 0 (nonmember).
enum class MembershipLabel : int { kNonmember = 0, kMember = 1 };

std::string_view ToString(Language language);
Language ParseLanguage(std::string_view text);
std::string_view ToString(MembershipLabel label);
inline int ToInt(MembershipLabel label) { return static_cast<int>(label); }

struct CodeSnippet {
  std::string id;
  std::string code;               // raw source, case preserved, non-empty
  std::optional<std::string> nl;  // description; non-empty after trim when present
  Language language = Language::kOther;
  std::string source;
};

// A corpus file together with the role it was loaded under.
struct Corpus {
  MembershipLabel role = MembershipLabel::kMember;
  std::string tag;
  std::vector<CodeSnippet> snippets;
};

}  // namespace cmi::corpus
