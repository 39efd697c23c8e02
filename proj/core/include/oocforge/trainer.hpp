#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oocforge/common.hpp"

namespace oocforge::train {

// Linear logistic classifier: z = <weights, x> + bias, f(x) = sigmoid(z).
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double logit(const std::vector<double>& x) const;
  double predict(const std::vector<double>& x) const;
};

struct LabeledExample {
  std::vector<double> features;
  int y = 0;
  int env = -1;     // 0..3 when present, -1 otherwise
  ImageId id = -1;  // optional row identity for joining tags
};

using Dataset = std::vector<LabeledExample>;
using IndexList = std::vector<std::size_t>;

enum class LossKind {
  ERM,
  ReweightLabel,
  UndersampleLabel,
  ReweightEnv,
  UndersampleEnv,
  GDRO,
  IRM,
  CVaR,
  Focal,
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);
bool needs_env(LossKind kind);
bool is_undersampling(LossKind kind);

struct TrainConfig {
  LossKind loss_kind = LossKind::ERM;
  double hyper = 0.0;   // alpha, K, lambda, p, or gamma depending on the loss
  double lr = 1e-4;
  double momentum = 0.9;
  double l2 = 1e-4;     // coefficient of R(f) = l2 * ||weights||^2
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 3;
  std::uint64_t seed = 0;
  bool irm_squared = true;  // squared penalty norm; unsquared |g| behind this flag

  void validate() const;  // throws ConfigError on out-of-range values
};

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

struct LossResult {
  double value = 0.0;
  Gradient grad;
};

// ---------------------------------------------------------------------------
// Loss functions. Each returns the batch loss and its analytic parameter
// gradient; `idx` selects the batch rows out of `data`.
// ---------------------------------------------------------------------------

// mean xent + l2*||w||^2
LossResult loss_erm(const LinearModel& model, const Dataset& data,
                    const IndexList& idx, double l2);

// (1/n) sum (1/w_i)^alpha * xent_i + l2*||w||^2; w_i in (0,1].
LossResult loss_reweight(const LinearModel& model, const Dataset& data,
                         const IndexList& idx,
                         const std::vector<double>& example_weights,
                         double alpha, double l2);

// n i.i.d. draws with P(i) proportional to (1/w_i)^alpha, deterministic
// given the seed.
IndexList draw_undersample_indices(std::size_t n,
                                   const std::vector<double>& example_weights,
                                   double alpha, std::uint64_t seed);

// max over envs present in the batch of [group mean xent + K/sqrt(n_c)]
// + l2*||w||^2, with n_c the full training-set group size. Subgradient flows
// through the argmax group only; ties resolve to the lowest env id.
LossResult loss_gdro(const LinearModel& model, const Dataset& data,
                     const IndexList& idx, double K,
                     const std::array<std::size_t, 4>& group_sizes, double l2);

// g = mean (sigmoid(z_i) - y_i) * z_i over one environment; the scalar output
// multiplier acts on the logit. Returns g^2 and its parameter gradient
// 2g * mean[(sigmoid'(z_i)*z_i + sigmoid(z_i) - y_i) * dz_i/dtheta].
LossResult irm_penalty(const LinearModel& model, const Dataset& data,
                       const IndexList& env_idx, bool squared = true);

// sum over envs present of [env mean xent + lambda * penalty] + l2*||w||^2
// (sum across environments, not mean).
LossResult loss_irm(const LinearModel& model, const Dataset& data,
                    const IndexList& idx, double lambda, double l2,
                    bool squared = true);

// mean of the ceil(p*n) worst per-example xents + l2*||w||^2; subgradient
// through the selected examples.
LossResult loss_cvar(const LinearModel& model, const Dataset& data,
                     const IndexList& idx, double p, double l2);

// (1/n) sum -(1-q_i)^gamma log(q_i) + l2*||w||^2 with q_i the probability
// assigned to the observed label.
LossResult loss_focal(const LinearModel& model, const Dataset& data,
                      const IndexList& idx, double gamma, double l2);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Probability masses w_i = P(Y = y_i) resp. P(C = c_i) on the dataset.
std::vector<double> label_weights(const Dataset& data);
std::vector<double> env_weights(const Dataset& data);

// Quantities derived from the full training set once per run.
struct TrainContext {
  std::vector<double> example_weights;        // reweight / undersample kinds
  std::array<std::size_t, 4> group_sizes{};   // GDRO n_c
};
TrainContext make_context(const Dataset& train_data, const TrainConfig& config);

LossResult batch_loss(const LinearModel& model, const Dataset& data,
                      const IndexList& batch, const TrainConfig& config,
                      const TrainContext& ctx);

struct EpochStats {
  double train_loss = 0.0;
  double valid_nll = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_valid_nll = 0.0;
  bool early_stopped = false;
};

struct TrainOutcome {
  LinearModel model;
  TrainHistory history;
};

// Seeded momentum SGD over shuffled mini-batches with early stopping on mean
// validation xent (patience epochs without improvement); returns the
// best-validation checkpoint. Deterministic given config.seed. Throws
// ComputeError on divergence (non-finite loss).
TrainOutcome train(const TrainConfig& config, const Dataset& train_data,
                   const Dataset& valid_data);

double mean_nll_on(const LinearModel& model, const Dataset& data);
double mean_nll_on(const LinearModel& model, const Dataset& data,
                   const IndexList& idx);

// ---------------------------------------------------------------------------
// Hyperparameter sweeps
// ---------------------------------------------------------------------------

struct SweepEntry {
  double hyper = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> hp_nll_per_seed;
  std::vector<double> hn_nll_per_seed;
  double hp_nll = 0.0;  // mean across seeds
  double hn_nll = 0.0;
  double maxloss = 0.0;
  bool selected = false;
};

struct SweepResult {
  TrainConfig best;
  std::vector<SweepEntry> entries;
};

// Trains every grid value over n_seeds seeds (seed, seed+1, ...), averages
// the validation NLL on hard positives and hard negatives across seeds, and
// selects the argmin of max(hp_nll, hn_nll), first-in-grid tie-break. Throws
// ComputeError when either hard index list is empty.
SweepResult sweep_and_select(const std::vector<double>& grid,
                             const TrainConfig& base,
                             const Dataset& train_data,
                             const Dataset& valid_data,
                             const IndexList& valid_hard_pos,
                             const IndexList& valid_hard_neg, int n_seeds = 3);

// Default hyperparameter lists per loss kind.
const std::vector<double>& default_grid(LossKind kind);

// ---------------------------------------------------------------------------
// Synthetic spurious-correlation data
// ---------------------------------------------------------------------------

// Features: [core signal correlated with y, spurious signal agreeing with y
// on 1-minority_fraction of examples, kSynthNoiseDims noise dims];
// env = 2*y + (spurious agrees with y). Deterministic given seed.
inline constexpr std::size_t kSynthNoiseDims = 8;

Dataset synth_spurious_dataset(std::uint64_t seed, std::size_t n,
                               double core_strength, double spurious_strength,
                               double minority_fraction);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

// JSONL rows {"features": [...], "y": 0|1, "env": 0..3?, "id": int?};
// id defaults to the 0-based row index.
Dataset load_dataset_jsonl(const std::string& path);
void save_dataset_jsonl(const Dataset& data, const std::string& path);

// Config JSON mirrors TrainConfig fields; missing fields take the defaults.
TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& config, const std::string& path);

void save_model(const LinearModel& model, const TrainConfig& config,
                const TrainHistory& history, const std::string& path);
LinearModel load_model(const std::string& path);

}  // namespace oocforge::train
