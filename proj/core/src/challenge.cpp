#include "oocforge/challenge.hpp"

#include <algorithm>
#include <unordered_set>

#include "json_io.hpp"

namespace oocforge::challenge {

namespace {

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

detail::json ids_to_json(const std::vector<ImageId>& ids) {
  return detail::json(ids);
}

}  // namespace

int ChallengeSet::label_of(ImageId id) const {
  const auto in = [&](const std::vector<ImageId>& v) {
    return std::binary_search(v.begin(), v.end(), id);
  };
  if (in(hard_positives) || in(easy_positives)) return 1;
  if (in(hard_negatives) || in(easy_negatives)) return 0;
  throw LookupError("image " + std::to_string(id) +
                    " is not a member of challenge set '" + task + "'");
}

std::map<ImageId, Tag> ChallengeSet::tag_map() const {
  std::map<ImageId, Tag> out;
  for (ImageId id : hard_positives) out[id] = Tag::HardPositive;
  for (ImageId id : hard_negatives) out[id] = Tag::HardNegative;
  for (ImageId id : easy_positives) out[id] = Tag::EasyPositive;
  for (ImageId id : easy_negatives) out[id] = Tag::EasyNegative;
  return out;
}

std::vector<ImageId> ChallengeSet::all_ids() const {
  std::vector<ImageId> out;
  for (const auto* part :
       {&hard_positives, &hard_negatives, &easy_positives, &easy_negatives}) {
    out.insert(out.end(), part->begin(), part->end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TaskScore score_one_task(const std::map<ImageId, double>& nll_by_id,
                         const HardnessTags& tags) {
  std::vector<double> hard_losses;
  std::vector<double> all_losses;
  for (const auto& [id, tag] : tags.tags) {
    auto it = nll_by_id.find(id);
    if (it == nll_by_id.end()) {
      throw IntegrityError("no loss for tagged image " + std::to_string(id) +
                           " on task '" + tags.task + "'");
    }
    all_losses.push_back(it->second);
    if (is_hard(tag)) hard_losses.push_back(it->second);
  }
  if (hard_losses.empty()) {
    throw ComputeError("task '" + tags.task + "' has zero hard examples");
  }
  TaskScore score;
  score.task = tags.task;
  score.nll_hard = mean_of(hard_losses);
  score.nll_all = mean_of(all_losses);
  score.gap = score.nll_hard - score.nll_all;
  score.n_hp = tags.count(Tag::HardPositive);
  score.n_hn = tags.count(Tag::HardNegative);
  return score;
}

ScoreTasksResult score_tasks(
    const std::vector<std::pair<std::map<ImageId, double>, HardnessTags>>&
        per_task) {
  ScoreTasksResult out;
  for (const auto& [losses, tags] : per_task) {
    try {
      out.scores.push_back(score_one_task(losses, tags));
    } catch (const ComputeError&) {
      out.excluded.push_back(tags.task);
    }
  }
  return out;
}

const std::vector<std::string>& default_exclusions() {
  static const std::vector<std::string> kDefaults = {"sheep", "handbag",
                                                     "bottle", "wine-glass"};
  return kDefaults;
}

SelectResult select_tasks(const std::vector<TaskScore>& scores,
                          std::size_t min_hard, std::size_t k,
                          const std::vector<std::string>& exclusions) {
  std::unordered_set<std::string> excluded;
  for (const auto& name : exclusions) {
    excluded.insert(data::normalize_name(name));
  }

  SelectResult result;
  for (const auto& score : scores) {
    if (score.n_hp < min_hard || score.n_hn < min_hard) continue;
    if (excluded.count(data::normalize_name(score.task)) > 0) continue;
    result.survivors.push_back(score);
  }
  std::sort(result.survivors.begin(), result.survivors.end(),
            [](const TaskScore& a, const TaskScore& b) {
              if (a.gap != b.gap) return a.gap > b.gap;
              return a.task < b.task;
            });
  if (result.survivors.size() < k) {
    result.warning = true;
  } else {
    result.survivors.resize(k);
  }
  for (const auto& score : result.survivors) {
    result.tasks.push_back(score.task);
  }
  return result;
}

EnvironmentAssignment assign_environments(const data::AnnotationStore& store,
                                          const std::vector<ImageId>& ids,
                                          CategoryId target,
                                          const ce::CueSet& cue_set) {
  if (cue_set.empty()) {
    throw ComputeError("environments undefined for target " +
                       std::to_string(target) + ": cue set is empty");
  }
  const CategoryId top = cue_set.top_cue();
  EnvironmentAssignment envs;
  for (ImageId id : ids) {
    const int y = store.label(id, target) ? 1 : 0;
    const int c = store.area_fraction(id, top) > 0.0 ? 1 : 0;
    envs.env[id] = 2 * y + c;
  }
  return envs;
}

ChallengeSet build_challenge_set(const HardnessTags& tags,
                                 const EnvironmentAssignment& envs,
                                 const std::string& split) {
  ChallengeSet set;
  set.task = tags.task;
  set.criterion = tags.criterion;
  set.param_a = tags.param_a;
  set.param_b = tags.param_b;
  set.split = split;
  set.hard_positives = tags.ids_with(Tag::HardPositive);
  set.hard_negatives = tags.ids_with(Tag::HardNegative);
  set.easy_positives = tags.ids_with(Tag::EasyPositive);
  set.easy_negatives = tags.ids_with(Tag::EasyNegative);
  set.environments = envs.env;
  return set;
}

void export_challenge_set(const ChallengeSet& set, const std::string& path) {
  detail::json doc;
  doc["task"] = set.task;
  doc["criterion"] = to_string(set.criterion);
  if (set.criterion == Criterion::CE) {
    doc["params"] = {{"alpha", set.param_a}, {"beta", set.param_b}};
  } else {
    doc["params"] = {{"tau_hp", set.param_a}, {"tau_hn", set.param_b}};
  }
  doc["split"] = set.split;
  doc["hard_positives"] = ids_to_json(set.hard_positives);
  doc["hard_negatives"] = ids_to_json(set.hard_negatives);
  doc["easy_positives"] = ids_to_json(set.easy_positives);
  doc["easy_negatives"] = ids_to_json(set.easy_negatives);
  detail::json envs = detail::json::object();
  for (const auto& [id, env] : set.environments) {
    envs[std::to_string(id)] = env;
  }
  doc["environments"] = envs;
  detail::write_json_atomic(path, doc);
}

ChallengeSet import_challenge_set(const std::string& path) {
  const detail::json doc = detail::parse_json_file(path);
  ChallengeSet set;
  try {
    set.task = doc.at("task").get<std::string>();
    set.criterion = criterion_from_string(doc.at("criterion").get<std::string>());
    const auto& params = doc.at("params");
    if (set.criterion == Criterion::CE) {
      set.param_a = params.at("alpha").get<double>();
      set.param_b = params.at("beta").get<double>();
    } else {
      set.param_a = params.at("tau_hp").get<double>();
      set.param_b = params.at("tau_hn").get<double>();
    }
    set.split = doc.at("split").get<std::string>();
    set.hard_positives = doc.at("hard_positives").get<std::vector<ImageId>>();
    set.hard_negatives = doc.at("hard_negatives").get<std::vector<ImageId>>();
    set.easy_positives = doc.at("easy_positives").get<std::vector<ImageId>>();
    set.easy_negatives = doc.at("easy_negatives").get<std::vector<ImageId>>();
    for (const auto& [key, value] : doc.at("environments").items()) {
      set.environments[std::stoll(key)] = value.get<int>();
    }
  } catch (const detail::json::exception& e) {
    throw ParseError(path + ": malformed challenge set: " + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError(path + ": malformed environment key");
  }
  for (auto* part : {&set.hard_positives, &set.hard_negatives,
                     &set.easy_positives, &set.easy_negatives}) {
    std::sort(part->begin(), part->end());
  }
  return set;
}

}  // namespace oocforge::challenge
