#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oocforge/annotations.hpp"
#include "oocforge/ce_miner.hpp"
#include "oocforge/common.hpp"
#include "oocforge/hardness.hpp"

namespace oocforge::challenge {

// Task selection statistic: gap between mean NLL on hard examples (CE
// criterion) and mean NLL on all examples of the split.
struct TaskScore {
  std::string task;
  double nll_hard = 0.0;
  double nll_all = 0.0;
  double gap = 0.0;  // nll_hard - nll_all
  std::size_t n_hp = 0;
  std::size_t n_hn = 0;
};

struct ScoreTasksResult {
  std::vector<TaskScore> scores;
  std::vector<std::string> excluded;  // tasks with zero hard examples
};

struct SelectResult {
  std::vector<std::string> tasks;  // gap-descending, name tie-break
  bool warning = false;            // fewer survivors than k
  std::vector<TaskScore> survivors;
};

// env = 2*y + c with c = 1 iff the top cue is present (area_fraction > 0).
struct EnvironmentAssignment {
  std::map<ImageId, int> env;
};

// Serialized task definition shared by both miners: criterion, parameters,
// member ids per tag, environment assignment. Round-trips losslessly.
struct ChallengeSet {
  std::string task;
  Criterion criterion = Criterion::CE;
  double param_a = 0.0;  // alpha or tau_hp
  double param_b = 0.0;  // beta or tau_hn
  std::string split;     // "valid" or "test"
  std::vector<ImageId> hard_positives;
  std::vector<ImageId> hard_negatives;
  std::vector<ImageId> easy_positives;
  std::vector<ImageId> easy_negatives;
  std::map<ImageId, int> environments;

  // y for every member id; throws LookupError for ids not in the set.
  int label_of(ImageId id) const;
  std::map<ImageId, Tag> tag_map() const;
  std::vector<ImageId> all_ids() const;
};

// One TaskScore per task whose tags contain at least one hard example; the
// rest land in `excluded`. Losses must cover every tagged id exactly.
ScoreTasksResult score_tasks(
    const std::vector<std::pair<std::map<ImageId, double>, HardnessTags>>&
        per_task);

TaskScore score_one_task(const std::map<ImageId, double>& nll_by_id,
                         const HardnessTags& tags);

// Drops tasks with n_hp < min_hard or n_hn < min_hard or in `exclusions`
// (hyphen-normalized names), sorts by gap descending with name tie-break,
// takes the top k. Fewer than k survivors sets the warning flag.
SelectResult select_tasks(const std::vector<TaskScore>& scores,
                          std::size_t min_hard, std::size_t k,
                          const std::vector<std::string>& exclusions);

// Default exclusion list: near-duplicates of tasks already selected.
const std::vector<std::string>& default_exclusions();

// Throws ComputeError when the cue set is empty (no top cue exists).
EnvironmentAssignment assign_environments(const data::AnnotationStore& store,
                                          const std::vector<ImageId>& ids,
                                          CategoryId target,
                                          const ce::CueSet& cue_set);

ChallengeSet build_challenge_set(const HardnessTags& tags,
                                 const EnvironmentAssignment& envs,
                                 const std::string& split);

void export_challenge_set(const ChallengeSet& set, const std::string& path);
ChallengeSet import_challenge_set(const std::string& path);

}  // namespace oocforge::challenge
