#include "oocforge/hardness.hpp"

namespace oocforge {

std::string to_string(Criterion c) {
  return c == Criterion::CE ? "CE" : "Gist";
}

Criterion criterion_from_string(const std::string& s) {
  if (s == "CE") return Criterion::CE;
  if (s == "Gist") return Criterion::Gist;
  throw ParseError("unknown criterion '" + s + "'");
}

std::size_t HardnessTags::count(Tag t) const {
  std::size_t n = 0;
  for (const auto& [_, tag] : tags) {
    if (tag == t) ++n;
  }
  return n;
}

std::vector<ImageId> HardnessTags::ids_with(Tag t) const {
  std::vector<ImageId> out;
  for (const auto& [id, tag] : tags) {
    if (tag == t) out.push_back(id);
  }
  return out;
}

}  // namespace oocforge
