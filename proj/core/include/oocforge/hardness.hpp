#pragma once

#include <map>
#include <string>
#include <vector>

#include "oocforge/common.hpp"

namespace oocforge {

enum class Tag { HardPositive, HardNegative, EasyPositive, EasyNegative };

enum class Criterion { CE, Gist };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

inline bool is_positive(Tag t) {
  return t == Tag::HardPositive || t == Tag::EasyPositive;
}
inline bool is_hard(Tag t) {
  return t == Tag::HardPositive || t == Tag::HardNegative;
}

// Per-(task, split, criterion) hard/easy labels. Every example in the tagged
// split receives exactly one tag; hard/easy positives only appear on Y=1
// examples, negatives only on Y=0. params holds (alpha, beta) for CE and
// (tau_hp, tau_hn) for Gist.
struct HardnessTags {
  std::string task;
  CategoryId task_id = 0;
  Criterion criterion = Criterion::CE;
  double param_a = 0.0;
  double param_b = 0.0;
  std::map<ImageId, Tag> tags;

  std::size_t count(Tag t) const;
  std::vector<ImageId> ids_with(Tag t) const;
  std::size_t n_hard_positive() const { return count(Tag::HardPositive); }
  std::size_t n_hard_negative() const { return count(Tag::HardNegative); }
};

}  // namespace oocforge
