#include "oocforge/ce_miner.hpp"

#include <algorithm>

namespace oocforge::ce {

CategoryId CueSet::top_cue() const {
  if (cues.empty()) {
    throw ComputeError("cue set for target " + std::to_string(target) +
                       " is empty");
  }
  return cues.front().first;
}

ContextScore context_score(const data::AnnotationStore& store,
                           const std::vector<ImageId>& train_ids,
                           CategoryId target, CategoryId cue) {
  if (cue == target) {
    throw ConfigError("cue must differ from target");
  }
  const auto positives = store.positives(train_ids, target);
  if (positives.empty()) {
    throw ComputeError("context score undefined: no training image contains "
                       "category " +
                       std::to_string(target));
  }
  double sum = 0.0;
  for (ImageId id : positives) {
    sum += store.area_fraction(id, cue) - store.area_fraction(id, target);
  }
  return ContextScore{target, cue, sum / static_cast<double>(positives.size())};
}

CueSet alpha_context_cues(const data::AnnotationStore& store,
                          const std::vector<ImageId>& train_ids,
                          CategoryId target, double alpha) {
  const auto positives = store.positives(train_ids, target);
  if (positives.empty()) {
    throw ComputeError("cue set undefined: no training image contains "
                       "category " +
                       std::to_string(target));
  }
  const double n = static_cast<double>(positives.size());

  // Same summation order as context_score, so the per-pair scores agree
  // bit-for-bit with single-pair queries. Categories absent from every
  // positive score -mean Area(Y).
  CueSet out;
  out.target = target;
  out.alpha = alpha;
  for (CategoryId cat : store.categories().ids()) {
    if (cat == target) continue;
    double sum = 0.0;
    for (ImageId id : positives) {
      sum += store.area_fraction(id, cat) - store.area_fraction(id, target);
    }
    const double score = sum / n;
    if (score > alpha) {
      out.cues.emplace_back(cat, score);
    }
  }
  std::sort(out.cues.begin(), out.cues.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

HardnessTags tag_ce_hardness(const data::AnnotationStore& store,
                             const std::vector<ImageId>& eval_ids,
                             CategoryId target, const CueSet& cue_set,
                             double beta) {
  HardnessTags tags;
  tags.task = data::normalize_name(store.categories().at(target).name);
  tags.task_id = target;
  tags.criterion = Criterion::CE;
  tags.param_a = cue_set.alpha;
  tags.param_b = beta;

  for (ImageId id : eval_ids) {
    const bool y = store.label(id, target);
    if (y) {
      bool all_below = !cue_set.empty();
      for (const auto& [cue, _] : cue_set.cues) {
        if (!(store.area_fraction(id, cue) < beta)) {
          all_below = false;
          break;
        }
      }
      tags.tags[id] = all_below ? Tag::HardPositive : Tag::EasyPositive;
    } else {
      bool some_above = false;
      for (const auto& [cue, _] : cue_set.cues) {
        if (store.area_fraction(id, cue) > beta) {
          some_above = true;
          break;
        }
      }
      tags.tags[id] = some_above ? Tag::HardNegative : Tag::EasyNegative;
    }
  }
  return tags;
}

std::pair<double, double> hardness_balance(const data::AnnotationStore& store,
                                           const std::vector<ImageId>& train_ids,
                                           const std::vector<ImageId>& eval_ids,
                                           CategoryId target, double alpha,
                                           double beta) {
  const CueSet cues = alpha_context_cues(store, train_ids, target, alpha);
  const HardnessTags tags = tag_ce_hardness(store, eval_ids, target, cues, beta);
  const auto n_hp = tags.count(Tag::HardPositive);
  const auto n_ep = tags.count(Tag::EasyPositive);
  const auto n_hn = tags.count(Tag::HardNegative);
  const auto n_en = tags.count(Tag::EasyNegative);
  const auto n_pos = n_hp + n_ep;
  const auto n_neg = n_hn + n_en;
  if (n_pos == 0 || n_neg == 0) {
    throw ComputeError("hardness balance undefined: split has " +
                       std::to_string(n_pos) + " positives and " +
                       std::to_string(n_neg) + " negatives");
  }
  return {static_cast<double>(n_hp) / static_cast<double>(n_pos),
          static_cast<double>(n_hn) / static_cast<double>(n_neg)};
}

}  // namespace oocforge::ce
