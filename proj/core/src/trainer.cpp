#include "oocforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "json_io.hpp"
#include "oocforge/rng.hpp"

namespace oocforge::train {

double LinearModel::logit(const std::vector<double>& x) const {
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
  return z;
}

double LinearModel::predict(const std::vector<double>& x) const {
  return sigmoid(logit(x));
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ERM: return "ERM";
    case LossKind::ReweightLabel: return "ReweightLabel";
    case LossKind::UndersampleLabel: return "UndersampleLabel";
    case LossKind::ReweightEnv: return "ReweightEnv";
    case LossKind::UndersampleEnv: return "UndersampleEnv";
    case LossKind::GDRO: return "GDRO";
    case LossKind::IRM: return "IRM";
    case LossKind::CVaR: return "CVaR";
    case LossKind::Focal: return "Focal";
  }
  throw ConfigError("invalid loss kind");
}

LossKind loss_kind_from_string(const std::string& s) {
  static const std::map<std::string, LossKind> kNames = {
      {"ERM", LossKind::ERM},
      {"ReweightLabel", LossKind::ReweightLabel},
      {"UndersampleLabel", LossKind::UndersampleLabel},
      {"ReweightEnv", LossKind::ReweightEnv},
      {"UndersampleEnv", LossKind::UndersampleEnv},
      {"GDRO", LossKind::GDRO},
      {"IRM", LossKind::IRM},
      {"CVaR", LossKind::CVaR},
      {"Focal", LossKind::Focal},
  };
  auto it = kNames.find(s);
  if (it == kNames.end()) {
    throw ConfigError("unknown loss kind '" + s + "'");
  }
  return it->second;
}

bool needs_env(LossKind kind) {
  return kind == LossKind::ReweightEnv || kind == LossKind::UndersampleEnv ||
         kind == LossKind::GDRO || kind == LossKind::IRM;
}

bool is_undersampling(LossKind kind) {
  return kind == LossKind::UndersampleLabel || kind == LossKind::UndersampleEnv;
}

void TrainConfig::validate() const {
  if (lr < 0.0) throw ConfigError("lr must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (l2 < 0.0) throw ConfigError("l2 must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  switch (loss_kind) {
    case LossKind::CVaR:
      if (!(hyper > 0.0 && hyper <= 1.0)) {
        throw ConfigError("CVaR p must be in (0, 1]");
      }
      break;
    case LossKind::Focal:
      if (hyper < 0.0) throw ConfigError("focal gamma must be >= 0");
      break;
    case LossKind::GDRO:
      if (hyper < 0.0) throw ConfigError("GDRO K must be >= 0");
      break;
    case LossKind::IRM:
      if (hyper < 0.0) throw ConfigError("IRM lambda must be >= 0");
      break;
    case LossKind::ReweightLabel:
    case LossKind::UndersampleLabel:
    case LossKind::ReweightEnv:
    case LossKind::UndersampleEnv:
      if (hyper < 0.0) throw ConfigError("adjustment alpha must be >= 0");
      break;
    case LossKind::ERM:
      break;
  }
}

namespace {

struct GradAccum {
  explicit GradAccum(std::size_t dim) { grad.weights.assign(dim, 0.0); }

  // Adds coeff * dLoss/dz for one example (dz/dw = x, dz/db = 1).
  void add(const std::vector<double>& x, double coeff) {
    for (std::size_t i = 0; i < x.size(); ++i) grad.weights[i] += coeff * x[i];
    grad.bias += coeff;
  }

  void add_l2(const LinearModel& model, double l2) {
    for (std::size_t i = 0; i < grad.weights.size(); ++i) {
      grad.weights[i] += 2.0 * l2 * model.weights[i];
    }
  }

  Gradient grad;
};

double l2_term(const LinearModel& model, double l2) {
  double s = 0.0;
  for (double w : model.weights) s += w * w;
  return l2 * s;
}

void check_batch(const IndexList& idx) {
  if (idx.empty()) throw ComputeError("loss undefined on an empty batch");
}

}  // namespace

LossResult loss_erm(const LinearModel& model, const Dataset& data,
                    const IndexList& idx, double l2) {
  check_batch(idx);
  GradAccum acc(model.weights.size());
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i : idx) {
    const auto& ex = data[i];
    const double q = model.predict(ex.features);
    sum += xent(q, ex.y);
    acc.add(ex.features, inv_n * (q - ex.y));
  }
  acc.add_l2(model, l2);
  return {sum * inv_n + l2_term(model, l2), std::move(acc.grad)};
}

LossResult loss_reweight(const LinearModel& model, const Dataset& data,
                         const IndexList& idx,
                         const std::vector<double>& example_weights,
                         double alpha, double l2) {
  check_batch(idx);
  GradAccum acc(model.weights.size());
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i : idx) {
    const auto& ex = data[i];
    const double w = example_weights[i];
    if (!(w > 0.0) || w > 1.0) {
      throw ConfigError("reweighting requires w_i in (0, 1]");
    }
    const double r = std::pow(1.0 / w, alpha);
    const double q = model.predict(ex.features);
    sum += r * xent(q, ex.y);
    acc.add(ex.features, inv_n * r * (q - ex.y));
  }
  acc.add_l2(model, l2);
  return {sum * inv_n + l2_term(model, l2), std::move(acc.grad)};
}

IndexList draw_undersample_indices(std::size_t n,
                                   const std::vector<double>& example_weights,
                                   double alpha, std::uint64_t seed) {
  std::vector<double> cumulative(example_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < example_weights.size(); ++i) {
    const double w = example_weights[i];
    if (!(w > 0.0) || w > 1.0) {
      throw ConfigError("undersampling requires w_i in (0, 1]");
    }
    total += std::pow(1.0 / w, alpha);
    cumulative[i] = total;
  }
  Rng rng(seed);
  IndexList out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    out.push_back(std::min<std::size_t>(it - cumulative.begin(),
                                        cumulative.size() - 1));
  }
  return out;
}

LossResult loss_gdro(const LinearModel& model, const Dataset& data,
                     const IndexList& idx, double K,
                     const std::array<std::size_t, 4>& group_sizes, double l2) {
  check_batch(idx);
  std::array<std::vector<std::size_t>, 4> groups;
  for (std::size_t i : idx) {
    const int env = data[i].env;
    if (env < 0 || env > 3) {
      throw ConfigError("GDRO requires env labels in 0..3");
    }
    groups[env].push_back(i);
  }

  int argmax = -1;
  double max_adjusted = -std::numeric_limits<double>::infinity();
  std::array<double, 4> group_mean{};
  for (int env = 0; env < 4; ++env) {
    if (groups[env].empty()) continue;  // absent from this batch
    if (group_sizes[env] == 0) {
      throw ConfigError("GDRO group " + std::to_string(env) +
                        " is empty in the training set");
    }
    double sum = 0.0;
    for (std::size_t i : groups[env]) {
      sum += xent(model.predict(data[i].features), data[i].y);
    }
    group_mean[env] = sum / static_cast<double>(groups[env].size());
    const double adjusted =
        group_mean[env] + K / std::sqrt(static_cast<double>(group_sizes[env]));
    // Strict > keeps the lowest env id on ties.
    if (adjusted > max_adjusted) {
      max_adjusted = adjusted;
      argmax = env;
    }
  }
  if (argmax < 0) {
    throw ComputeError("GDRO: no group present in batch");
  }

  GradAccum acc(model.weights.size());
  const double inv_g = 1.0 / static_cast<double>(groups[argmax].size());
  for (std::size_t i : groups[argmax]) {
    const auto& ex = data[i];
    const double q = model.predict(ex.features);
    acc.add(ex.features, inv_g * (q - ex.y));
  }
  acc.add_l2(model, l2);
  return {max_adjusted + l2_term(model, l2), std::move(acc.grad)};
}

LossResult irm_penalty(const LinearModel& model, const Dataset& data,
                       const IndexList& env_idx, bool squared) {
  check_batch(env_idx);
  const double inv_n = 1.0 / static_cast<double>(env_idx.size());

  // g = d/dw [ mean xent(sigmoid(w*z_i), y_i) ] at w=1
  //   = mean (sigmoid(z_i) - y_i) * z_i.
  double g = 0.0;
  for (std::size_t i : env_idx) {
    const auto& ex = data[i];
    const double z = model.logit(ex.features);
    g += (sigmoid(z) - ex.y) * z;
  }
  g *= inv_n;

  // dg/dtheta = mean [sigmoid'(z_i)*z_i + (sigmoid(z_i) - y_i)] * dz_i/dtheta.
  GradAccum dg(model.weights.size());
  for (std::size_t i : env_idx) {
    const auto& ex = data[i];
    const double z = model.logit(ex.features);
    const double s = sigmoid(z);
    dg.add(ex.features, inv_n * (s * (1.0 - s) * z + (s - ex.y)));
  }

  LossResult out;
  out.grad.weights.assign(model.weights.size(), 0.0);
  if (squared) {
    out.value = g * g;
    const double scale = 2.0 * g;
    for (std::size_t i = 0; i < out.grad.weights.size(); ++i) {
      out.grad.weights[i] = scale * dg.grad.weights[i];
    }
    out.grad.bias = scale * dg.grad.bias;
  } else {
    out.value = std::abs(g);
    const double scale = g >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < out.grad.weights.size(); ++i) {
      out.grad.weights[i] = scale * dg.grad.weights[i];
    }
    out.grad.bias = scale * dg.grad.bias;
  }
  return out;
}

LossResult loss_irm(const LinearModel& model, const Dataset& data,
                    const IndexList& idx, double lambda, double l2,
                    bool squared) {
  check_batch(idx);
  std::array<std::vector<std::size_t>, 4> envs;
  for (std::size_t i : idx) {
    const int env = data[i].env;
    if (env < 0 || env > 3) {
      throw ConfigError("IRM requires env labels in 0..3");
    }
    envs[env].push_back(i);
  }

  double value = 0.0;
  GradAccum acc(model.weights.size());
  for (int env = 0; env < 4; ++env) {
    if (envs[env].empty()) continue;
    const double inv_c = 1.0 / static_cast<double>(envs[env].size());
    for (std::size_t i : envs[env]) {
      const auto& ex = data[i];
      const double q = model.predict(ex.features);
      value += inv_c * xent(q, ex.y);
      acc.add(ex.features, inv_c * (q - ex.y));
    }
    if (lambda != 0.0) {
      const LossResult pen = irm_penalty(model, data, envs[env], squared);
      value += lambda * pen.value;
      for (std::size_t i = 0; i < acc.grad.weights.size(); ++i) {
        acc.grad.weights[i] += lambda * pen.grad.weights[i];
      }
      acc.grad.bias += lambda * pen.grad.bias;
    }
  }
  acc.add_l2(model, l2);
  return {value + l2_term(model, l2), std::move(acc.grad)};
}

LossResult loss_cvar(const LinearModel& model, const Dataset& data,
                     const IndexList& idx, double p, double l2) {
  check_batch(idx);
  if (!(p > 0.0 && p <= 1.0)) {
    throw ConfigError("CVaR p must be in (0, 1]");
  }
  struct Entry {
    double loss;
    std::size_t pos;  // position in idx; stable tie-break
  };
  std::vector<Entry> entries;
  entries.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& ex = data[idx[k]];
    entries.push_back({xent(model.predict(ex.features), ex.y), k});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.loss != b.loss) return a.loss > b.loss;
    return a.pos < b.pos;
  });
  const auto m = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(idx.size())));

  GradAccum acc(model.weights.size());
  double sum = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& ex = data[idx[entries[k].pos]];
    sum += entries[k].loss;
    const double q = model.predict(ex.features);
    acc.add(ex.features, inv_m * (q - ex.y));
  }
  acc.add_l2(model, l2);
  return {sum * inv_m + l2_term(model, l2), std::move(acc.grad)};
}

LossResult loss_focal(const LinearModel& model, const Dataset& data,
                      const IndexList& idx, double gamma, double l2) {
  check_batch(idx);
  if (gamma < 0.0) throw ConfigError("focal gamma must be >= 0");
  GradAccum acc(model.weights.size());
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i : idx) {
    const auto& ex = data[i];
    const double f = model.predict(ex.features);
    const double q = clamp_prob(ex.y == 1 ? f : 1.0 - f);
    const double mod = std::pow(1.0 - q, gamma);
    sum += -mod * std::log(q);
    // dL/dq = gamma (1-q)^(gamma-1) log q - (1-q)^gamma / q
    const double dl_dq = (gamma == 0.0 ? 0.0
                                       : gamma * std::pow(1.0 - q, gamma - 1.0) *
                                             std::log(q)) -
                         mod / q;
    const double dq_dz = (ex.y == 1 ? 1.0 : -1.0) * f * (1.0 - f);
    acc.add(ex.features, inv_n * dl_dq * dq_dz);
  }
  acc.add_l2(model, l2);
  return {sum * inv_n + l2_term(model, l2), std::move(acc.grad)};
}

std::vector<double> label_weights(const Dataset& data) {
  std::size_t n_pos = 0;
  for (const auto& ex : data) n_pos += (ex.y == 1);
  const double n = static_cast<double>(data.size());
  const double p_pos = static_cast<double>(n_pos) / n;
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = data[i].y == 1 ? p_pos : 1.0 - p_pos;
  }
  return out;
}

std::vector<double> env_weights(const Dataset& data) {
  std::array<std::size_t, 4> counts{};
  for (const auto& ex : data) {
    if (ex.env < 0 || ex.env > 3) {
      throw ConfigError("environment weights require env labels in 0..3");
    }
    counts[ex.env] += 1;
  }
  const double n = static_cast<double>(data.size());
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = static_cast<double>(counts[data[i].env]) / n;
  }
  return out;
}

TrainContext make_context(const Dataset& train_data, const TrainConfig& config) {
  TrainContext ctx;
  switch (config.loss_kind) {
    case LossKind::ReweightLabel:
    case LossKind::UndersampleLabel:
      ctx.example_weights = label_weights(train_data);
      break;
    case LossKind::ReweightEnv:
    case LossKind::UndersampleEnv:
      ctx.example_weights = env_weights(train_data);
      break;
    case LossKind::GDRO:
      for (const auto& ex : train_data) {
        if (ex.env < 0 || ex.env > 3) {
          throw ConfigError("GDRO requires env labels in 0..3");
        }
        ctx.group_sizes[ex.env] += 1;
      }
      break;
    default:
      break;
  }
  return ctx;
}

LossResult batch_loss(const LinearModel& model, const Dataset& data,
                      const IndexList& batch, const TrainConfig& config,
                      const TrainContext& ctx) {
  switch (config.loss_kind) {
    case LossKind::ERM:
      return loss_erm(model, data, batch, config.l2);
    case LossKind::ReweightLabel:
    case LossKind::ReweightEnv:
      return loss_reweight(model, data, batch, ctx.example_weights,
                           config.hyper, config.l2);
    case LossKind::UndersampleLabel:
    case LossKind::UndersampleEnv:
      // Batches are slices of the per-epoch resample, equally weighted.
      return loss_erm(model, data, batch, config.l2);
    case LossKind::GDRO:
      return loss_gdro(model, data, batch, config.hyper, ctx.group_sizes,
                       config.l2);
    case LossKind::IRM:
      return loss_irm(model, data, batch, config.hyper, config.l2,
                      config.irm_squared);
    case LossKind::CVaR:
      return loss_cvar(model, data, batch, config.hyper, config.l2);
    case LossKind::Focal:
      return loss_focal(model, data, batch, config.hyper, config.l2);
  }
  throw ConfigError("invalid loss kind");
}

double mean_nll_on(const LinearModel& model, const Dataset& data) {
  IndexList idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return mean_nll_on(model, data, idx);
}

double mean_nll_on(const LinearModel& model, const Dataset& data,
                   const IndexList& idx) {
  if (idx.empty()) {
    throw ComputeError("mean NLL undefined on empty index list");
  }
  double sum = 0.0;
  for (std::size_t i : idx) {
    sum += xent(model.predict(data[i].features), data[i].y);
  }
  return sum / static_cast<double>(idx.size());
}

namespace {

void validate_dataset(const Dataset& data, const TrainConfig& config,
                      const char* which) {
  if (data.empty()) {
    throw ConfigError(std::string(which) + " dataset is empty");
  }
  const std::size_t dim = data.front().features.size();
  for (const auto& ex : data) {
    if (ex.features.size() != dim) {
      throw IntegrityError(std::string(which) +
                           " dataset has inconsistent feature dimensions");
    }
    if (ex.y != 0 && ex.y != 1) {
      throw IntegrityError(std::string(which) + " dataset has non-binary label");
    }
    if (needs_env(config.loss_kind) && (ex.env < 0 || ex.env > 3)) {
      throw ConfigError(to_string(config.loss_kind) +
                        " requires env labels in 0..3 on every example");
    }
  }
}

}  // namespace

TrainOutcome train(const TrainConfig& config, const Dataset& train_data,
                   const Dataset& valid_data) {
  config.validate();
  validate_dataset(train_data, config, "train");
  validate_dataset(valid_data, config, "valid");

  const std::size_t n = train_data.size();
  const std::size_t dim = train_data.front().features.size();
  const TrainContext ctx = make_context(train_data, config);

  LinearModel model;
  model.weights.assign(dim, 0.0);
  model.bias = 0.0;

  std::vector<double> velocity_w(dim, 0.0);
  double velocity_b = 0.0;

  TrainOutcome out;
  out.history.best_valid_nll = std::numeric_limits<double>::infinity();
  out.model = model;
  int stale_epochs = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    IndexList order;
    if (is_undersampling(config.loss_kind)) {
      order = draw_undersample_indices(n, ctx.example_weights, config.hyper,
                                       mix_seed(config.seed, epoch));
    } else {
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      Rng rng(mix_seed(config.seed, epoch));
      rng.shuffle(order);
    }

    double epoch_loss_sum = 0.0;
    std::size_t n_batches = 0;
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      IndexList batch(order.begin() + start, order.begin() + stop);
      const LossResult res = batch_loss(model, train_data, batch, config, ctx);
      if (!std::isfinite(res.value)) {
        throw ComputeError("training diverged: non-finite " +
                           to_string(config.loss_kind) + " loss at epoch " +
                           std::to_string(epoch));
      }
      for (std::size_t i = 0; i < dim; ++i) {
        velocity_w[i] = config.momentum * velocity_w[i] + res.grad.weights[i];
        model.weights[i] -= config.lr * velocity_w[i];
      }
      velocity_b = config.momentum * velocity_b + res.grad.bias;
      model.bias -= config.lr * velocity_b;
      epoch_loss_sum += res.value;
      ++n_batches;
    }

    EpochStats stats;
    stats.train_loss = epoch_loss_sum / static_cast<double>(n_batches);
    stats.valid_nll = mean_nll_on(model, valid_data);
    out.history.epochs.push_back(stats);

    if (stats.valid_nll < out.history.best_valid_nll) {
      out.history.best_valid_nll = stats.valid_nll;
      out.history.best_epoch = epoch;
      out.model = model;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= config.patience) {
        out.history.early_stopped = true;
        break;
      }
    }
  }
  return out;
}

SweepResult sweep_and_select(const std::vector<double>& grid,
                             const TrainConfig& base, const Dataset& train_data,
                             const Dataset& valid_data,
                             const IndexList& valid_hard_pos,
                             const IndexList& valid_hard_neg, int n_seeds) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (n_seeds < 1) throw ConfigError("sweep requires n_seeds >= 1");
  if (valid_hard_pos.empty() || valid_hard_neg.empty()) {
    throw ComputeError("sweep selection undefined: validation split has no "
                       "hard positives or no hard negatives");
  }

  SweepResult result;
  std::size_t best_entry = 0;
  double best_maxloss = std::numeric_limits<double>::infinity();
  for (double hyper : grid) {
    SweepEntry entry;
    entry.hyper = hyper;
    for (int s = 0; s < n_seeds; ++s) {
      TrainConfig config = base;
      config.hyper = hyper;
      config.seed = base.seed + static_cast<std::uint64_t>(s);
      const TrainOutcome outcome = train(config, train_data, valid_data);
      entry.seeds.push_back(config.seed);
      entry.hp_nll_per_seed.push_back(
          mean_nll_on(outcome.model, valid_data, valid_hard_pos));
      entry.hn_nll_per_seed.push_back(
          mean_nll_on(outcome.model, valid_data, valid_hard_neg));
    }
    const auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    entry.hp_nll = mean(entry.hp_nll_per_seed);
    entry.hn_nll = mean(entry.hn_nll_per_seed);
    entry.maxloss = std::max(entry.hp_nll, entry.hn_nll);
    result.entries.push_back(std::move(entry));
    // Strict < keeps the earliest grid entry on ties.
    if (result.entries.back().maxloss < best_maxloss) {
      best_maxloss = result.entries.back().maxloss;
      best_entry = result.entries.size() - 1;
    }
  }
  result.entries[best_entry].selected = true;
  result.best = base;
  result.best.hyper = result.entries[best_entry].hyper;
  return result;
}

const std::vector<double>& default_grid(LossKind kind) {
  static const std::vector<double> kGdro = {5, 30, 60, 240};
  static const std::vector<double> kIrm = {0.1, 1, 3, 10};
  static const std::vector<double> kCvar = {0.05, 0.1, 0.15};
  static const std::vector<double> kFocal = {0.2, 0.5, 0.7, 1};
  static const std::vector<double> kLabelAdjust = {0.2, 0.5, 0.7, 1};
  static const std::vector<double> kEnvReweight = {0.5, 1, 1.5, 2};
  static const std::vector<double> kEnvUndersample = {0.2, 0.5, 0.7, 1};
  static const std::vector<double> kErm = {0};
  switch (kind) {
    case LossKind::GDRO: return kGdro;
    case LossKind::IRM: return kIrm;
    case LossKind::CVaR: return kCvar;
    case LossKind::Focal: return kFocal;
    case LossKind::ReweightLabel:
    case LossKind::UndersampleLabel: return kLabelAdjust;
    case LossKind::ReweightEnv: return kEnvReweight;
    case LossKind::UndersampleEnv: return kEnvUndersample;
    case LossKind::ERM: return kErm;
  }
  throw ConfigError("invalid loss kind");
}

Dataset synth_spurious_dataset(std::uint64_t seed, std::size_t n,
                               double core_strength, double spurious_strength,
                               double minority_fraction) {
  if (!(minority_fraction > 0.0 && minority_fraction < 1.0)) {
    throw ConfigError("minority_fraction must be in (0, 1)");
  }
  Rng rng(seed);
  Dataset data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.y = rng.uniform() < 0.5 ? 1 : 0;
    const bool agrees = rng.uniform() >= minority_fraction;
    const double y_sign = ex.y == 1 ? 1.0 : -1.0;
    const double s_sign = agrees ? y_sign : -y_sign;
    ex.features.reserve(2 + kSynthNoiseDims);
    ex.features.push_back(core_strength * y_sign + rng.normal());
    ex.features.push_back(spurious_strength * s_sign + rng.normal());
    for (std::size_t d = 0; d < kSynthNoiseDims; ++d) {
      ex.features.push_back(rng.normal());
    }
    ex.env = 2 * ex.y + (agrees ? 1 : 0);
    ex.id = static_cast<ImageId>(i);
    data.push_back(std::move(ex));
  }
  return data;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

Dataset load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::json row = detail::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": malformed JSONL row");
    }
    LabeledExample ex;
    try {
      ex.features = row.at("features").get<std::vector<double>>();
      ex.y = row.at("y").get<int>();
      if (row.contains("env")) ex.env = row.at("env").get<int>();
      ex.id = row.contains("id") ? row.at("id").get<ImageId>()
                                 : static_cast<ImageId>(data.size());
    } catch (const detail::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (ex.y != 0 && ex.y != 1) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": label must be 0 or 1");
    }
    for (double x : ex.features) {
      if (!std::isfinite(x)) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": non-finite feature");
      }
    }
    data.push_back(std::move(ex));
  }
  return data;
}

void save_dataset_jsonl(const Dataset& data, const std::string& path) {
  std::string out;
  for (const auto& ex : data) {
    detail::json row;
    row["features"] = ex.features;
    row["y"] = ex.y;
    if (ex.env >= 0) row["env"] = ex.env;
    if (ex.id >= 0) row["id"] = ex.id;
    out += row.dump() + "\n";
  }
  detail::write_file_atomic(path, out);
}

TrainConfig load_train_config(const std::string& path) {
  const detail::json doc = detail::parse_json_file(path);
  TrainConfig config;
  try {
    if (doc.contains("loss_kind")) {
      config.loss_kind =
          loss_kind_from_string(doc.at("loss_kind").get<std::string>());
    }
    if (doc.contains("hyper")) config.hyper = doc.at("hyper").get<double>();
    if (doc.contains("lr")) config.lr = doc.at("lr").get<double>();
    if (doc.contains("momentum")) {
      config.momentum = doc.at("momentum").get<double>();
    }
    if (doc.contains("l2")) config.l2 = doc.at("l2").get<double>();
    if (doc.contains("batch_size")) {
      config.batch_size = doc.at("batch_size").get<int>();
    }
    if (doc.contains("max_epochs")) {
      config.max_epochs = doc.at("max_epochs").get<int>();
    }
    if (doc.contains("patience")) config.patience = doc.at("patience").get<int>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("irm_squared")) {
      config.irm_squared = doc.at("irm_squared").get<bool>();
    }
  } catch (const detail::json::exception& e) {
    throw ParseError(path + ": malformed train config: " + e.what());
  }
  config.validate();
  return config;
}

namespace {

detail::json config_to_json(const TrainConfig& config) {
  detail::json j;
  j["loss_kind"] = to_string(config.loss_kind);
  j["hyper"] = config.hyper;
  j["lr"] = config.lr;
  j["momentum"] = config.momentum;
  j["l2"] = config.l2;
  j["batch_size"] = config.batch_size;
  j["max_epochs"] = config.max_epochs;
  j["patience"] = config.patience;
  j["seed"] = config.seed;
  j["irm_squared"] = config.irm_squared;
  return j;
}

}  // namespace

void save_train_config(const TrainConfig& config, const std::string& path) {
  detail::write_json_atomic(path, config_to_json(config));
}

void save_model(const LinearModel& model, const TrainConfig& config,
                const TrainHistory& history, const std::string& path) {
  detail::json doc;
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  doc["config"] = config_to_json(config);
  detail::json hist;
  hist["best_epoch"] = history.best_epoch;
  hist["best_valid_nll"] = history.best_valid_nll;
  hist["early_stopped"] = history.early_stopped;
  detail::json epochs = detail::json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"train_loss", e.train_loss}, {"valid_nll", e.valid_nll}});
  }
  hist["epochs"] = epochs;
  doc["history"] = hist;
  detail::write_json_atomic(path, doc);
}

LinearModel load_model(const std::string& path) {
  const detail::json doc = detail::parse_json_file(path);
  LinearModel model;
  try {
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
  } catch (const detail::json::exception& e) {
    throw ParseError(path + ": malformed model file: " + e.what());
  }
  return model;
}

}  // namespace oocforge::train
