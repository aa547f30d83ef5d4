#include "cmi/corpus/snippet.hpp"

#include "cmi/common/error.hpp"

namespace cmi::corpus {

std::string_view ToString(Language language) {
  switch (language) {
    case Language::kPython: return "python";
    case Language::kJava: return "java";
    case Language::kOther: return "other";
  }
  return "other";
}

Language ParseLanguage(std::string_view text) {
  if (text == "python") return Language::kPython;
  if (text == "java") return Language::kJava;
  return Language::kOther;
}

std::string_view ToString(MembershipLabel label) {
  return label == MembershipLabel::kMember ? "member" : "nonmember";
}

}  // namespace cmi::corpus
