#pragma once

#include <utility>
#include <vector>

#include "oocforge/annotations.hpp"
#include "oocforge/common.hpp"
#include "oocforge/hardness.hpp"

namespace oocforge::ce {

// Mean area-fraction difference E[Area(C) - Area(Y) | Y present], taken over
// the training images where the target is present.
struct ContextScore {
  CategoryId target = 0;
  CategoryId cue = 0;
  double score = 0.0;
};

// Cues with score strictly above alpha, in descending score order with
// ascending category id as the tie-break. The front entry is the "top cue"
// used for environment assignment.
struct CueSet {
  CategoryId target = 0;
  double alpha = 0.0;
  std::vector<std::pair<CategoryId, double>> cues;

  bool empty() const { return cues.empty(); }
  CategoryId top_cue() const;
};

// Throws ComputeError when no training image contains the target.
ContextScore context_score(const data::AnnotationStore& store,
                           const std::vector<ImageId>& train_ids,
                           CategoryId target, CategoryId cue);

CueSet alpha_context_cues(const data::AnnotationStore& store,
                          const std::vector<ImageId>& train_ids,
                          CategoryId target, double alpha);

// (alpha, beta)-hardness with strict comparisons:
//   Y=1, cue set nonempty, Area(C) < beta for all cues  -> hard positive
//   Y=0, Area(C) > beta for some cue                    -> hard negative
// everything else is easy. The cue set must have been built on the training
// split, never on eval_ids.
HardnessTags tag_ce_hardness(const data::AnnotationStore& store,
                             const std::vector<ImageId>& eval_ids,
                             CategoryId target, const CueSet& cue_set,
                             double beta);

// The two conditional rates P[hard | Y=1] and P[hard | Y=0] on the eval ids,
// with cues mined from train_ids. Throws ComputeError when the eval ids have
// zero positives or zero negatives.
std::pair<double, double> hardness_balance(const data::AnnotationStore& store,
                                           const std::vector<ImageId>& train_ids,
                                           const std::vector<ImageId>& eval_ids,
                                           CategoryId target, double alpha,
                                           double beta);

}  // namespace oocforge::ce
