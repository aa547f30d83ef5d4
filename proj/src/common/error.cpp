#include "cmi/common/error.hpp"

namespace cmi {

namespace {
std::string JoinIds(const std::vector<std::string>& ids) {
  std::string out = "duplicate snippet id(s):";
  for (const auto& id : ids) out += " " + id;
  return out;
}
}  // namespace

DuplicateIdError::DuplicateIdError(std::vector<std::string> ids)
    : Error(JoinIds(ids)), ids_(std::move(ids)) {}

}  // namespace cmi
