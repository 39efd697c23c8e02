#include "oocforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json_io.hpp"

namespace oocforge::metrics {

double auc(const PredictionSet& preds) {
  std::size_t n_pos = 0;
  for (const auto& p : preds) n_pos += (p.y == 1);
  const std::size_t n_neg = preds.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ComputeError("AUC undefined: input contains a single class");
  }

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score < preds[b].score;
  });

  // Average ranks over tied groups, then the Mann-Whitney identity.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           preds[order[j]].score == preds[order[i]].score) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (preds[order[k]].y == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double n_pos_d = static_cast<double>(n_pos);
  const double u = pos_rank_sum - n_pos_d * (n_pos_d + 1.0) / 2.0;
  return u / (n_pos_d * static_cast<double>(n_neg));
}

double error_rate(const PredictionSet& preds, double threshold) {
  if (preds.empty()) {
    throw ComputeError("error rate undefined on empty input");
  }
  std::size_t errors = 0;
  for (const auto& p : preds) {
    const int predicted = p.score > threshold ? 1 : 0;
    errors += (predicted != p.y);
  }
  return static_cast<double>(errors) / static_cast<double>(preds.size());
}

double mean_nll(const PredictionSet& preds) {
  if (preds.empty()) {
    throw ComputeError("mean NLL undefined on empty input");
  }
  double sum = 0.0;
  for (const auto& p : preds) sum += xent(p.score, p.y);
  return sum / static_cast<double>(preds.size());
}

double ece(const PredictionSet& preds, int n_bins) {
  if (preds.empty()) {
    throw ComputeError("ECE undefined on empty input");
  }
  if (n_bins < 1) {
    throw ConfigError("ECE requires n_bins >= 1");
  }
  const auto bins = static_cast<std::size_t>(n_bins);
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> score_sum(bins, 0.0);
  std::vector<double> label_sum(bins, 0.0);
  for (const auto& p : preds) {
    // Bins ((b-1)/B, b/B], except the first which also takes score 0.
    std::size_t b =
        p.score <= 0.0
            ? 0
            : static_cast<std::size_t>(
                  std::ceil(p.score * static_cast<double>(bins))) -
                  1;
    if (b >= bins) b = bins - 1;
    count[b] += 1;
    score_sum[b] += p.score;
    label_sum[b] += p.y;
  }
  double total = 0.0;
  const double n = static_cast<double>(preds.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double c = static_cast<double>(count[b]);
    total += (c / n) * std::abs(score_sum[b] / c - label_sum[b] / c);
  }
  return total;
}

namespace {

SubsetMetrics compute_subset(const PredictionSet& preds, int n_bins) {
  SubsetMetrics m;
  m.count = preds.size();
  if (preds.empty()) return m;
  m.error = error_rate(preds);
  m.nll = mean_nll(preds);
  m.ece = ece(preds, n_bins);
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& p : preds) (p.y == 1 ? has_pos : has_neg) = true;
  if (has_pos && has_neg) m.auc = auc(preds);
  return m;
}

}  // namespace

MetricsReport split_report(const PredictionSet& preds, const HardnessTags& tags,
                           int n_bins) {
  PredictionSet hard_pos, hard_neg, hard, easy;
  for (const auto& p : preds) {
    auto it = tags.tags.find(p.id);
    if (it == tags.tags.end()) {
      throw IntegrityError("prediction for image " + std::to_string(p.id) +
                           " has no hardness tag");
    }
    switch (it->second) {
      case Tag::HardPositive:
        hard_pos.push_back(p);
        hard.push_back(p);
        break;
      case Tag::HardNegative:
        hard_neg.push_back(p);
        hard.push_back(p);
        break;
      case Tag::EasyPositive:
      case Tag::EasyNegative:
        easy.push_back(p);
        break;
    }
  }
  MetricsReport report;
  report.subsets["hard_pos"] = compute_subset(hard_pos, n_bins);
  report.subsets["hard_neg"] = compute_subset(hard_neg, n_bins);
  report.subsets["hard"] = compute_subset(hard, n_bins);
  report.subsets["easy"] = compute_subset(easy, n_bins);
  report.subsets["all"] = compute_subset(preds, n_bins);
  return report;
}

namespace {

detail::json subset_to_json(const SubsetMetrics& m) {
  detail::json j;
  j["count"] = m.count;
  if (m.auc) j["auc"] = *m.auc;
  if (m.error) j["error"] = *m.error;
  if (m.nll) j["nll"] = *m.nll;
  if (m.ece) j["ece"] = *m.ece;
  return j;
}

std::string cell(const std::optional<double>& v) {
  return v ? std::to_string(*v) : "";
}

}  // namespace

void save_metrics_report(const MetricsReport& report, const std::string& path) {
  detail::json doc;
  for (const auto& [name, m] : report.subsets) {
    doc[name] = subset_to_json(m);
  }
  detail::write_json_atomic(path, doc);
}

void save_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::string out = "subset,count,auc,error,nll,ece\n";
  for (const auto& [name, m] : report.subsets) {
    out += name + "," + std::to_string(m.count) + "," + cell(m.auc) + "," +
           cell(m.error) + "," + cell(m.nll) + "," + cell(m.ece) + "\n";
  }
  detail::write_file_atomic(path, out);
}

}  // namespace oocforge::metrics
