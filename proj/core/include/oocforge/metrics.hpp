#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oocforge/common.hpp"
#include "oocforge/hardness.hpp"

namespace oocforge::metrics {

struct Prediction {
  ImageId id = -1;
  double score = 0.0;  // probability of Y=1, in [0,1]
  int y = 0;
};

using PredictionSet = std::vector<Prediction>;

// Mann-Whitney AUC via the average-rank formula, exact under ties.
// Throws ComputeError for single-class input.
double auc(const PredictionSet& preds);

// Fraction with (score > threshold) != y; a score exactly at the threshold
// predicts 0.
double error_rate(const PredictionSet& preds, double threshold = 0.5);

// Mean xent(score, y) with epsilon clamping.
double mean_nll(const PredictionSet& preds);

// Equal-width bins on [0,1] by score, right-closed except the first bin;
// ECE = sum_b (|b|/n) * |mean score_b - mean y_b|.
double ece(const PredictionSet& preds, int n_bins = 15);

struct SubsetMetrics {
  std::size_t count = 0;
  std::optional<double> auc;  // absent for empty or single-class subsets
  std::optional<double> error;
  std::optional<double> nll;
  std::optional<double> ece;
};

// Per-subset breakdown over {hard_pos, hard_neg, hard, easy, all}. AUC is
// reported only where both classes are present (hard union and easy, not the
// single-class hard_pos/hard_neg subsets).
struct MetricsReport {
  std::map<std::string, SubsetMetrics> subsets;
};

// Tags must cover every prediction id (IntegrityError otherwise).
MetricsReport split_report(const PredictionSet& preds, const HardnessTags& tags,
                           int n_bins = 15);

void save_metrics_report(const MetricsReport& report, const std::string& path);
void save_metrics_csv(const MetricsReport& report, const std::string& path);

}  // namespace oocforge::metrics
