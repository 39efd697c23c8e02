#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "manifest.hpp"
#include "oocforge/annotations.hpp"
#include "oocforge/ce_miner.hpp"
#include "oocforge/challenge.hpp"
#include "oocforge/common.hpp"
#include "oocforge/embeddings.hpp"
#include "oocforge/gist_miner.hpp"
#include "oocforge/metrics.hpp"
#include "oocforge/split.hpp"
#include "oocforge/trainer.hpp"

namespace oocforge::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) {
    throw ParseError(std::string(flag) + ": no such file: " + path);
  }
}

// Write-then-rename; readers of a command's output directory never observe
// partial files even while per-task workers are writing.
void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open file for writing: " + tmp);
    out << contents;
    if (!out.good()) throw ParseError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> out{};
  int field = 0;
  std::size_t start = 0;
  bool more = true;
  while (more) {
    const std::size_t comma = text.find(',', start);
    const std::string piece = comma == std::string::npos
                                  ? text.substr(start)
                                  : text.substr(start, comma - start);
    std::size_t consumed = 0;
    try {
      if (field < 3) out[field] = std::stod(piece, &consumed);
    } catch (const std::exception&) {
      consumed = std::string::npos;  // flag as unparsable
    }
    if (field >= 3 || consumed != piece.size()) {
      throw ParseError("--ratios expects three comma-separated numbers, got '" +
                       text + "'");
    }
    ++field;
    more = comma != std::string::npos;
    start = comma + 1;
  }
  if (field != 3) {
    throw ParseError("--ratios expects three comma-separated numbers, got '" +
                     text + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string piece = comma == std::string::npos
                                  ? text.substr(start)
                                  : text.substr(start, comma - start);
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Fan per-task work out to a fixed pool; the first worker exception wins and
// is rethrown after join.
void parallel_for(int jobs, std::size_t n_items,
                  const std::function<void(std::size_t)>& fn) {
  const int n_threads = std::max(1, std::min<int>(jobs, n_items));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_items) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string challenge_file_name(const std::string& task,
                                const std::string& criterion,
                                const std::string& eval_split) {
  return task + "." + criterion + "." + eval_split + ".json";
}

const std::vector<ImageId>& eval_part(const data::DatasetSplit& split,
                                      const std::string& name) {
  if (name != "valid" && name != "test") {
    throw ConfigError("--eval-split must be 'valid' or 'test', got '" + name +
                      "'");
  }
  return split.part(name);
}

}  // namespace

int cmd_split(const SplitArgs& args) {
  require_file(args.annotations, "--annotations");
  const auto ratios = parse_ratios(args.ratios);
  const auto store = data::load_annotations(args.annotations);
  const auto split = data::make_split(store, ratios, args.seed);
  data::save_split(split, args.out);

  Manifest manifest("split");
  manifest.param("ratios", ratios);
  manifest.param("out", args.out);
  manifest.seed(args.seed);
  manifest.input("annotations", args.annotations);
  manifest.write_beside(args.out);

  std::printf("split: %zu train / %zu valid / %zu test -> %s\n",
              split.train_ids.size(), split.valid_ids.size(),
              split.test_ids.size(), args.out.c_str());
  return 0;
}

int cmd_mine_ce(const MineCeArgs& args) {
  require_file(args.annotations, "--annotations");
  require_file(args.split, "--split");
  if (args.all_tasks == !args.task.empty()) {
    throw ConfigError("choose exactly one of --task or --all-tasks");
  }

  const auto store = data::load_annotations(args.annotations);
  const auto split = data::load_split(args.split);
  const auto& eval_ids = eval_part(split, args.eval_split);

  std::vector<CategoryId> targets;
  if (args.all_tasks) {
    targets = store.categories().ids();
  } else {
    targets.push_back(store.categories().id_of(args.task));
  }

  struct TaskRow {
    std::string name;
    bool skipped = false;
    std::string warning;
    std::size_t n_cues = 0;
    std::size_t n_hp = 0;
    std::size_t n_hn = 0;
    std::size_t n_pos = 0;
  };
  std::vector<TaskRow> rows(targets.size());

  fs::create_directories(args.out);
  parallel_for(args.jobs, targets.size(), [&](std::size_t i) {
    const CategoryId target = targets[i];
    TaskRow& row = rows[i];
    row.name = data::normalize_name(store.categories().at(target).name);
    ce::CueSet cues;
    try {
      cues = ce::alpha_context_cues(store, split.train_ids, target, args.alpha);
    } catch (const ComputeError& e) {
      // No positive training image for this task.
      if (!args.all_tasks) throw;
      row.skipped = true;
      row.warning = e.what();
      return;
    }
    const HardnessTags tags =
        ce::tag_ce_hardness(store, eval_ids, target, cues, args.beta);
    challenge::EnvironmentAssignment envs;
    if (!cues.empty()) {
      envs = challenge::assign_environments(store, eval_ids, target, cues);
    } else {
      row.warning = "no alpha-context cues; hard sets are empty";
    }
    const auto set = challenge::build_challenge_set(tags, envs, args.eval_split);
    challenge::export_challenge_set(
        set, (fs::path(args.out) /
              challenge_file_name(row.name, "ce", args.eval_split))
                 .string());
    row.n_cues = cues.cues.size();
    row.n_hp = tags.count(Tag::HardPositive);
    row.n_hn = tags.count(Tag::HardNegative);
    row.n_pos = row.n_hp + tags.count(Tag::EasyPositive);
  });

  Manifest manifest("mine-ce");
  manifest.param("alpha", args.alpha);
  manifest.param("beta", args.beta);
  manifest.param("eval_split", args.eval_split);
  manifest.param("task", args.all_tasks ? json("*") : json(args.task));
  manifest.param("out", args.out);
  manifest.input("annotations", args.annotations);
  manifest.input("split", args.split);
  manifest.write_into(args.out);

  std::printf("%-20s %6s %8s %8s %8s\n", "task", "cues", "hard+", "hard-",
              "pos");
  for (const auto& row : rows) {
    if (row.skipped) {
      std::fprintf(stderr, "warning: skipped %s: %s\n", row.name.c_str(),
                   row.warning.c_str());
      continue;
    }
    if (!row.warning.empty()) {
      std::fprintf(stderr, "warning: %s: %s\n", row.name.c_str(),
                   row.warning.c_str());
    }
    std::printf("%-20s %6zu %8zu %8zu %8zu\n", row.name.c_str(), row.n_cues,
                row.n_hp, row.n_hn, row.n_pos);
  }
  return 0;
}

int cmd_mine_gist(const MineGistArgs& args) {
  require_file(args.annotations, "--annotations");
  require_file(args.split, "--split");
  require_file(args.embeddings, "--embeddings");
  if (!fs::is_directory(args.ce_dir)) {
    throw ParseError("--ce-dir: no such directory: " + args.ce_dir);
  }

  const auto store = data::load_annotations(args.annotations);
  const auto split = data::load_split(args.split);
  const auto embeddings = data::load_embeddings(args.embeddings);

  std::vector<std::string> ce_files;
  for (const auto& entry : fs::directory_iterator(args.ce_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json" || entry.path().extension() != ".json" ||
        name.ends_with(".manifest.json")) {
      continue;
    }
    if (!args.task.empty() &&
        name.rfind(data::normalize_name(args.task) + ".", 0) != 0) {
      continue;
    }
    ce_files.push_back(entry.path().string());
  }
  std::sort(ce_files.begin(), ce_files.end());
  if (ce_files.empty()) {
    throw ParseError("no CE challenge sets found in " + args.ce_dir);
  }

  struct TaskRow {
    std::string name;
    double tau_hp = 0.0;
    double tau_hn = 0.0;
    std::size_t n_hp = 0;
    std::size_t n_hn = 0;
    std::size_t n_excluded = 0;
  };
  std::vector<TaskRow> rows(ce_files.size());

  fs::create_directories(args.out);
  parallel_for(args.jobs, ce_files.size(), [&](std::size_t i) {
    const auto ce_set = challenge::import_challenge_set(ce_files[i]);
    if (ce_set.criterion != Criterion::CE) {
      throw ParseError(ce_files[i] + ": expected a CE challenge set");
    }
    const CategoryId target = store.categories().id_of(ce_set.task);
    const auto& eval_ids = eval_part(split, ce_set.split);

    const auto prototype =
        gist::prototype_embedding(store, embeddings, split.train_ids, target);
    auto scores = gist::gist_scores(embeddings, eval_ids, prototype);
    scores.task = target;

    std::map<ImageId, int> labels;
    for (ImageId id : eval_ids) {
      labels[id] = store.label(id, target) ? 1 : 0;
    }

    const auto taus =
        gist::calibrate_tau(scores, labels, ce_set.hard_positives.size(),
                            ce_set.hard_negatives.size());
    HardnessTags tags = gist::tag_gist_hardness(scores, labels, taus);
    tags.task = ce_set.task;

    challenge::EnvironmentAssignment envs;
    envs.env = ce_set.environments;  // label x top-cue, criterion-independent
    const auto gist_set = challenge::build_challenge_set(tags, envs, ce_set.split);
    const std::string base =
        (fs::path(args.out) / (ce_set.task + ".gist." + ce_set.split)).string();
    challenge::export_challenge_set(gist_set, base + ".json");

    // per-image similarity dump for audit
    std::string dump;
    for (const auto& [id, sim] : scores.similarity) {
      json row;
      row["image_id"] = id;
      row["similarity"] = sim;
      dump += row.dump() + "\n";
    }
    write_atomic(base + ".scores.jsonl", dump);

    rows[i] = {ce_set.task,       taus.tau_hp,
               taus.tau_hn,       tags.count(Tag::HardPositive),
               tags.count(Tag::HardNegative), scores.excluded.size()};
  });

  Manifest manifest("mine-gist");
  manifest.param("ce_dir", args.ce_dir);
  manifest.param("task", args.task.empty() ? json("*") : json(args.task));
  manifest.param("out", args.out);
  manifest.input("annotations", args.annotations);
  manifest.input("split", args.split);
  manifest.input("embeddings", args.embeddings);
  manifest.write_into(args.out);

  std::printf("%-20s %8s %8s %8s %8s\n", "task", "tau_hp", "tau_hn", "hard+",
              "hard-");
  for (const auto& row : rows) {
    if (row.n_excluded > 0) {
      std::fprintf(stderr, "warning: %s: %zu zero-norm embeddings excluded\n",
                   row.name.c_str(), row.n_excluded);
    }
    std::printf("%-20s %8.4f %8.4f %8zu %8zu\n", row.name.c_str(), row.tau_hp,
                row.tau_hn, row.n_hp, row.n_hn);
  }
  return 0;
}

int cmd_select_tasks(const SelectArgs& args) {
  require_file(args.scores, "--scores");
  std::ifstream in(args.scores, std::ios::binary);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw ParseError(args.scores + ": expected a JSON array of task scores");
  }
  std::vector<challenge::TaskScore> scores;
  for (const auto& rec : doc) {
    challenge::TaskScore s;
    try {
      s.task = rec.at("task").get<std::string>();
      s.n_hp = rec.at("n_hp").get<std::size_t>();
      s.n_hn = rec.at("n_hn").get<std::size_t>();
      if (rec.contains("gap")) {
        s.gap = rec.at("gap").get<double>();
        s.nll_hard = rec.value("nll_hard", 0.0);
        s.nll_all = rec.value("nll_all", 0.0);
      } else {
        s.nll_hard = rec.at("nll_hard").get<double>();
        s.nll_all = rec.at("nll_all").get<double>();
        s.gap = s.nll_hard - s.nll_all;
      }
    } catch (const json::exception& e) {
      throw ParseError(args.scores + ": malformed score record: " + rec.dump());
    }
    scores.push_back(std::move(s));
  }

  const auto result = challenge::select_tasks(scores, args.min_hard, args.k,
                                              split_list(args.exclude));
  json out;
  out["selected"] = result.tasks;
  out["warning"] = result.warning;
  json survivors = json::array();
  for (const auto& s : result.survivors) {
    survivors.push_back({{"task", s.task},
                         {"gap", s.gap},
                         {"n_hp", s.n_hp},
                         {"n_hn", s.n_hn}});
  }
  out["survivors"] = survivors;
  write_atomic(args.out, out.dump(2) + "\n");

  Manifest manifest("select-tasks");
  manifest.param("min_hard", args.min_hard);
  manifest.param("k", args.k);
  manifest.param("exclude", split_list(args.exclude));
  manifest.param("out", args.out);
  manifest.input("scores", args.scores);
  manifest.write_beside(args.out);

  if (result.warning) {
    std::fprintf(stderr,
                 "warning: only %zu tasks survive the filters (k = %llu)\n",
                 result.tasks.size(),
                 static_cast<unsigned long long>(args.k));
  }
  for (const auto& task : result.tasks) {
    std::printf("%s\n", task.c_str());
  }
  return 0;
}

int cmd_train(const TrainArgs& args) {
  require_file(args.data, "--data");
  require_file(args.valid_data, "--valid-data");
  train::TrainConfig config;
  if (!args.config.empty()) {
    require_file(args.config, "--config");
    config = train::load_train_config(args.config);
  }
  const auto train_data = train::load_dataset_jsonl(args.data);
  const auto valid_data = train::load_dataset_jsonl(args.valid_data);
  const auto outcome = train::train(config, train_data, valid_data);
  train::save_model(outcome.model, config, outcome.history, args.out);

  Manifest manifest("train");
  manifest.param("loss_kind", train::to_string(config.loss_kind));
  manifest.param("hyper", config.hyper);
  manifest.param("out", args.out);
  manifest.seed(config.seed);
  manifest.input("data", args.data);
  manifest.input("valid_data", args.valid_data);
  if (!args.config.empty()) manifest.input("config", args.config);
  manifest.write_beside(args.out);

  std::printf("train: %s best_epoch=%d valid_nll=%.6f%s -> %s\n",
              train::to_string(config.loss_kind).c_str(),
              outcome.history.best_epoch, outcome.history.best_valid_nll,
              outcome.history.early_stopped ? " (early stop)" : "",
              args.out.c_str());
  return 0;
}

int cmd_sweep(const SweepArgs& args) {
  require_file(args.data, "--data");
  require_file(args.valid_data, "--valid-data");
  require_file(args.tags, "--tags");
  train::TrainConfig base;
  if (!args.config.empty()) {
    require_file(args.config, "--config");
    base = train::load_train_config(args.config);
  }

  std::vector<double> grid;
  if (!args.grid.empty()) {
    require_file(args.grid, "--grid");
    std::ifstream in(args.grid, std::ios::binary);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("values")) {
      throw ParseError(args.grid + ": expected {\"values\": [...]}");
    }
    grid = doc.at("values").get<std::vector<double>>();
  } else {
    grid = train::default_grid(base.loss_kind);
  }

  const auto train_data = train::load_dataset_jsonl(args.data);
  const auto valid_data = train::load_dataset_jsonl(args.valid_data);

  // Hard ids from the challenge-set file are matched against validation rows.
  const auto tag_set = challenge::import_challenge_set(args.tags);
  std::map<ImageId, std::size_t> row_of;
  for (std::size_t i = 0; i < valid_data.size(); ++i) {
    if (!row_of.emplace(valid_data[i].id, i).second) {
      throw IntegrityError("--valid-data: duplicate row id " +
                           std::to_string(valid_data[i].id));
    }
  }
  const auto rows_for = [&](const std::vector<ImageId>& ids) {
    train::IndexList idx;
    for (ImageId id : ids) {
      auto it = row_of.find(id);
      if (it == row_of.end()) {
        throw IntegrityError("--tags: id " + std::to_string(id) +
                             " not present in --valid-data");
      }
      idx.push_back(it->second);
    }
    return idx;
  };
  const auto hard_pos = rows_for(tag_set.hard_positives);
  const auto hard_neg = rows_for(tag_set.hard_negatives);

  const auto result = train::sweep_and_select(grid, base, train_data,
                                              valid_data, hard_pos, hard_neg,
                                              args.n_seeds);

  json out;
  out["loss_kind"] = train::to_string(base.loss_kind);
  out["n_seeds"] = args.n_seeds;
  json entries = json::array();
  for (const auto& e : result.entries) {
    entries.push_back({{"hyper", e.hyper},
                       {"seeds", e.seeds},
                       {"hp_nll_per_seed", e.hp_nll_per_seed},
                       {"hn_nll_per_seed", e.hn_nll_per_seed},
                       {"hp_nll", e.hp_nll},
                       {"hn_nll", e.hn_nll},
                       {"maxloss", e.maxloss},
                       {"selected", e.selected}});
  }
  out["entries"] = entries;
  out["best_hyper"] = result.best.hyper;
  write_atomic(args.out, out.dump(2) + "\n");

  Manifest manifest("sweep");
  manifest.param("loss_kind", train::to_string(base.loss_kind));
  manifest.param("grid", grid);
  manifest.param("n_seeds", args.n_seeds);
  manifest.param("out", args.out);
  manifest.seed(base.seed);
  manifest.input("data", args.data);
  manifest.input("valid_data", args.valid_data);
  manifest.input("tags", args.tags);
  if (!args.config.empty()) manifest.input("config", args.config);
  if (!args.grid.empty()) manifest.input("grid", args.grid);
  manifest.write_beside(args.out);

  for (const auto& e : result.entries) {
    std::printf("%s hyper=%-8g hp_nll=%.6f hn_nll=%.6f max=%.6f%s\n",
                train::to_string(base.loss_kind).c_str(), e.hyper, e.hp_nll,
                e.hn_nll, e.maxloss, e.selected ? "  <- selected" : "");
  }
  return 0;
}

int cmd_predict(const PredictArgs& args) {
  require_file(args.model, "--model");
  require_file(args.data, "--data");
  const auto model = train::load_model(args.model);
  const auto data = train::load_dataset_jsonl(args.data);
  std::string out;
  for (const auto& ex : data) {
    json row;
    row["image_id"] = ex.id;
    row["score"] = model.predict(ex.features);
    out += row.dump() + "\n";
  }
  write_atomic(args.out, out);

  Manifest manifest("predict");
  manifest.param("out", args.out);
  manifest.input("model", args.model);
  manifest.input("data", args.data);
  manifest.write_beside(args.out);

  std::printf("predict: %zu rows -> %s\n", data.size(), args.out.c_str());
  return 0;
}

namespace {

metrics::PredictionSet load_predictions(const std::string& path,
                                        const challenge::ChallengeSet& set) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  metrics::PredictionSet preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": malformed JSONL row");
    }
    metrics::Prediction p;
    try {
      p.id = row.at("image_id").get<ImageId>();
      p.score = row.at("score").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": score must lie in [0, 1]");
    }
    p.y = set.label_of(p.id);  // LookupError for non-members
    preds.push_back(p);
  }
  return preds;
}

}  // namespace

int cmd_eval(const EvalArgs& args) {
  require_file(args.predictions, "--predictions");
  require_file(args.challenge_set, "--challenge-set");
  const auto set = challenge::import_challenge_set(args.challenge_set);

  metrics::PredictionSet preds;
  try {
    preds = load_predictions(args.predictions, set);
  } catch (const LookupError& e) {
    // a prediction for an id outside the set is an input error
    throw IntegrityError(e.what());
  }

  HardnessTags tags;
  tags.task = set.task;
  tags.criterion = set.criterion;
  tags.param_a = set.param_a;
  tags.param_b = set.param_b;
  tags.tags = set.tag_map();

  const auto report = metrics::split_report(preds, tags, args.bins);
  metrics::save_metrics_report(report, args.out);
  if (!args.csv.empty()) {
    metrics::save_metrics_csv(report, args.csv);
  }

  Manifest manifest("eval");
  manifest.param("bins", args.bins);
  manifest.param("out", args.out);
  manifest.input("predictions", args.predictions);
  manifest.input("challenge_set", args.challenge_set);
  manifest.write_beside(args.out);

  for (const auto& [name, m] : report.subsets) {
    std::printf("%-9s n=%-6zu", name.c_str(), m.count);
    if (m.auc) std::printf(" auc=%.4f", *m.auc);
    if (m.error) std::printf(" err=%.4f", *m.error);
    if (m.nll) std::printf(" nll=%.4f", *m.nll);
    if (m.ece) std::printf(" ece=%.4f", *m.ece);
    std::printf("\n");
  }
  return 0;
}

int cmd_synth_data(const SynthArgs& args) {
  const auto data = train::synth_spurious_dataset(
      args.seed, args.n, args.core_strength, args.spurious_strength,
      args.minority_fraction);
  train::save_dataset_jsonl(data, args.out);

  Manifest manifest("synth-data");
  manifest.param("n", args.n);
  manifest.param("core_strength", args.core_strength);
  manifest.param("spurious_strength", args.spurious_strength);
  manifest.param("minority_fraction", args.minority_fraction);
  manifest.param("out", args.out);
  manifest.seed(args.seed);
  manifest.write_beside(args.out);

  std::array<std::size_t, 4> envs{};
  for (const auto& ex : data) envs[ex.env] += 1;
  std::printf("synth-data: n=%zu envs=[%zu, %zu, %zu, %zu] -> %s\n",
              data.size(), envs[0], envs[1], envs[2], envs[3],
              args.out.c_str());
  return 0;
}

}  // namespace oocforge::cli
