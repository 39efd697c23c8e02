#include "oocforge/gist_miner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oocforge::gist {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Candidate thresholds bracketing every achievable hard count: the smallest
// value itself (count 0 under a strict comparison), the midpoints between
// consecutive distinct values, and a point beyond the extreme value clamped
// to the [-1, 1] invariant.
std::vector<double> candidate_taus(std::vector<double> values, bool above) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> taus;
  if (values.empty()) return taus;
  if (!above) {
    // counting sims < tau
    taus.push_back(values.front());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      taus.push_back(0.5 * (values[i] + values[i + 1]));
    }
    taus.push_back(values.back() < 1.0 ? 0.5 * (values.back() + 1.0) : 1.0);
  } else {
    // counting sims > tau
    taus.push_back(values.back());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      taus.push_back(0.5 * (values[i] + values[i + 1]));
    }
    taus.push_back(values.front() > -1.0 ? 0.5 * (values.front() - 1.0) : -1.0);
  }
  return taus;
}

double pick_tau(const std::vector<double>& sims, std::size_t target_count,
                bool above) {
  // `above` false: count sims strictly below tau (hard positives);
  // `above` true: count sims strictly above tau (hard negatives).
  double best_tau = above ? 1.0 : -1.0;
  std::size_t best_count = 0;
  double best_diff = std::numeric_limits<double>::infinity();
  bool first = true;
  for (double tau : candidate_taus(sims, above)) {
    std::size_t count = 0;
    for (double s : sims) {
      if (above ? (s > tau) : (s < tau)) ++count;
    }
    const double diff = std::abs(static_cast<double>(count) -
                                 static_cast<double>(target_count));
    const bool better =
        first || diff < best_diff || (diff == best_diff && count < best_count);
    if (better) {
      best_tau = tau;
      best_count = count;
      best_diff = diff;
      first = false;
    }
  }
  return best_tau;
}

}  // namespace

std::vector<double> image_embedding(const data::EmbeddingStore& embeddings,
                                    ImageId image) {
  const auto& captions = embeddings.captions(image);
  std::vector<double> mean(embeddings.dimension(), 0.0);
  for (const auto& v : captions) {
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(captions.size());
  for (double& x : mean) x *= inv;
  return mean;
}

std::vector<double> prototype_embedding(const data::AnnotationStore& store,
                                        const data::EmbeddingStore& embeddings,
                                        const std::vector<ImageId>& train_ids,
                                        CategoryId target) {
  const auto positives = store.positives(train_ids, target);
  if (positives.empty()) {
    throw ComputeError("prototype undefined: no positive training image for "
                       "category " +
                       std::to_string(target));
  }
  std::vector<double> proto(embeddings.dimension(), 0.0);
  for (ImageId id : positives) {
    const auto emb = image_embedding(embeddings, id);
    for (std::size_t i = 0; i < emb.size(); ++i) proto[i] += emb[i];
  }
  const double inv = 1.0 / static_cast<double>(positives.size());
  for (double& x : proto) x *= inv;
  return proto;
}

GistScoreTable gist_scores(const data::EmbeddingStore& embeddings,
                           const std::vector<ImageId>& eval_ids,
                           const std::vector<double>& prototype) {
  const double proto_norm = norm(prototype);
  if (!(proto_norm > 0.0)) {
    throw ComputeError("prototype embedding has zero norm");
  }
  GistScoreTable table;
  for (ImageId id : eval_ids) {
    const auto emb = image_embedding(embeddings, id);
    const double emb_norm = norm(emb);
    if (!(emb_norm > 0.0)) {
      table.excluded.push_back(id);
      continue;
    }
    table.similarity[id] = dot(emb, prototype) / (emb_norm * proto_norm);
  }
  return table;
}

TauPair calibrate_tau(const GistScoreTable& scores,
                      const std::map<ImageId, int>& labels, std::size_t n_hp,
                      std::size_t n_hn) {
  std::vector<double> pos_sims;
  std::vector<double> neg_sims;
  for (const auto& [id, sim] : scores.similarity) {
    auto it = labels.find(id);
    if (it == labels.end()) {
      throw IntegrityError("no label for scored image " + std::to_string(id));
    }
    (it->second == 1 ? pos_sims : neg_sims).push_back(sim);
  }
  if (n_hp > pos_sims.size()) {
    throw ComputeError("calibration error: " + std::to_string(n_hp) +
                       " hard positives requested but only " +
                       std::to_string(pos_sims.size()) + " positives scored");
  }
  if (n_hn > neg_sims.size()) {
    throw ComputeError("calibration error: " + std::to_string(n_hn) +
                       " hard negatives requested but only " +
                       std::to_string(neg_sims.size()) + " negatives scored");
  }
  TauPair taus;
  taus.tau_hp = pos_sims.empty() ? -1.0 : pick_tau(pos_sims, n_hp, false);
  taus.tau_hn = neg_sims.empty() ? 1.0 : pick_tau(neg_sims, n_hn, true);
  return taus;
}

HardnessTags tag_gist_hardness(const GistScoreTable& scores,
                               const std::map<ImageId, int>& labels,
                               const TauPair& taus) {
  HardnessTags tags;
  tags.task_id = scores.task;
  tags.criterion = Criterion::Gist;
  tags.param_a = taus.tau_hp;
  tags.param_b = taus.tau_hn;
  for (const auto& [id, sim] : scores.similarity) {
    auto it = labels.find(id);
    if (it == labels.end()) {
      throw IntegrityError("no label for scored image " + std::to_string(id));
    }
    if (it->second == 1) {
      tags.tags[id] = sim < taus.tau_hp ? Tag::HardPositive : Tag::EasyPositive;
    } else {
      tags.tags[id] = sim > taus.tau_hn ? Tag::HardNegative : Tag::EasyNegative;
    }
  }
  return tags;
}

}  // namespace oocforge::gist
