#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "oocforge/annotations.hpp"
#include "oocforge/common.hpp"
#include "oocforge/embeddings.hpp"
#include "oocforge/hardness.hpp"

namespace oocforge::gist {

// Cosine similarity of each eval image's mean caption embedding to the
// class prototype. Images with a zero-norm embedding are excluded from
// tagging and reported separately.
struct GistScoreTable {
  CategoryId task = 0;
  std::map<ImageId, double> similarity;
  std::vector<ImageId> excluded;
};

struct TauPair {
  double tau_hp = 0.0;
  double tau_hn = 0.0;
};

// Elementwise arithmetic mean of the image's caption vectors, no
// renormalization. Throws LookupError when the image has no embedding.
std::vector<double> image_embedding(const data::EmbeddingStore& embeddings,
                                    ImageId image);

// Mean of image_embedding over training images where the target is present.
// Throws ComputeError when no positive training image exists.
std::vector<double> prototype_embedding(const data::AnnotationStore& store,
                                        const data::EmbeddingStore& embeddings,
                                        const std::vector<ImageId>& train_ids,
                                        CategoryId target);

GistScoreTable gist_scores(const data::EmbeddingStore& embeddings,
                           const std::vector<ImageId>& eval_ids,
                           const std::vector<double>& prototype);

// Calibrates (tau_hp, tau_hn) so that under strict comparisons the tagged
// hard counts reproduce the CE counts on the same split:
//   #{Y=1 : sim < tau_hp} == n_hp and #{Y=0 : sim > tau_hn} == n_hn.
// When the adjacent order statistics differ the threshold is their midpoint;
// when ties make an exact count impossible the tau minimizing |count - n|
// is returned, preferring the smaller count. Thresholds stay within [-1, 1].
// labels maps example id -> y; only ids present in `scores` participate.
TauPair calibrate_tau(const GistScoreTable& scores,
                      const std::map<ImageId, int>& labels,
                      std::size_t n_hp, std::size_t n_hn);

// Y=1 and sim < tau_hp -> hard positive; Y=0 and sim > tau_hn -> hard
// negative; strict inequalities, everything else easy.
HardnessTags tag_gist_hardness(const GistScoreTable& scores,
                               const std::map<ImageId, int>& labels,
                               const TauPair& taus);

}  // namespace oocforge::gist
