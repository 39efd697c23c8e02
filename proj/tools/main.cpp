// ooc-forge: mine out-of-context challenge sets from annotated image
// datasets and evaluate classifiers trained under robust losses.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "oocforge/common.hpp"

namespace {

int default_jobs() {
  if (const char* env = std::getenv("OOC_FORGE_JOBS")) {
    const int jobs = std::atoi(env);
    if (jobs >= 1) return jobs;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace oocforge::cli;

  CLI::App app{"ooc-forge: out-of-context challenge-set mining and robust "
               "training toolkit"};
  app.set_version_flag("--version", std::string(oocforge::kVersion));
  app.require_subcommand(1);

  SplitArgs split_args;
  auto* split = app.add_subcommand(
      "split", "Create a deterministic train/valid/test split");
  split->add_option("--annotations", split_args.annotations,
                    "COCO-format annotation JSON")->required();
  split->add_option("--ratios", split_args.ratios,
                    "train,valid,test fractions (default 0.7,0.1,0.2)");
  split->add_option("--seed", split_args.seed, "shuffle seed");
  split->add_option("--out", split_args.out, "output split JSON")->required();

  MineCeArgs ce_args;
  ce_args.jobs = default_jobs();
  auto* mine_ce = app.add_subcommand(
      "mine-ce", "Mine (alpha, beta)-hard examples by co-occurrence and "
                 "extractibility");
  mine_ce->add_option("--annotations", ce_args.annotations, "annotation JSON")
      ->required();
  mine_ce->add_option("--split", ce_args.split, "split JSON")->required();
  mine_ce->add_option("--task", ce_args.task, "single task (category name)");
  mine_ce->add_flag("--all-tasks", ce_args.all_tasks, "mine every category");
  mine_ce->add_option("--alpha", ce_args.alpha,
                      "context-cue threshold (default 0.05)");
  mine_ce->add_option("--beta", ce_args.beta,
                      "hardness area threshold (default 0.1)");
  mine_ce->add_option("--eval-split", ce_args.eval_split,
                      "split part to tag: valid or test (default test)");
  mine_ce->add_option("--out", ce_args.out, "output directory")->required();
  mine_ce->add_option("--jobs", ce_args.jobs,
                      "parallel tasks (default $OOC_FORGE_JOBS or 1)");

  MineGistArgs gist_args;
  gist_args.jobs = default_jobs();
  auto* mine_gist = app.add_subcommand(
      "mine-gist", "Mine tau-hard examples by caption-gist similarity, "
                   "calibrated to CE hard counts");
  mine_gist->add_option("--annotations", gist_args.annotations,
                        "annotation JSON")->required();
  mine_gist->add_option("--split", gist_args.split, "split JSON")->required();
  mine_gist->add_option("--embeddings", gist_args.embeddings,
                        "caption embeddings JSONL")->required();
  mine_gist->add_option("--ce-dir", gist_args.ce_dir,
                        "directory of CE challenge sets")->required();
  mine_gist->add_option("--task", gist_args.task, "single task filter");
  mine_gist->add_option("--out", gist_args.out, "output directory")->required();
  mine_gist->add_option("--jobs", gist_args.jobs,
                        "parallel tasks (default $OOC_FORGE_JOBS or 1)");

  SelectArgs select_args;
  auto* select = app.add_subcommand(
      "select-tasks", "Filter and rank tasks by hard-vs-all NLL gap");
  select->add_option("--scores", select_args.scores,
                     "JSON array of per-task scores")->required();
  select->add_option("--min-hard", select_args.min_hard,
                     "minimum hard positives and negatives (default 50)");
  select->add_option("--k", select_args.k, "tasks to keep (default 12)");
  select->add_option("--exclude", select_args.exclude,
                     "comma-separated excluded task names");
  select->add_option("--out", select_args.out, "output JSON")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train", "Train a linear logistic classifier under a robust loss");
  train->add_option("--data", train_args.data, "training JSONL")->required();
  train->add_option("--valid-data", train_args.valid_data,
                    "validation JSONL")->required();
  train->add_option("--config", train_args.config,
                    "train config JSON (defaults otherwise)");
  train->add_option("--out", train_args.out, "output model JSON")->required();

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand(
      "sweep", "Sweep a hyperparameter grid and select by min-max hard NLL");
  sweep->add_option("--data", sweep_args.data, "training JSONL")->required();
  sweep->add_option("--valid-data", sweep_args.valid_data,
                    "validation JSONL")->required();
  sweep->add_option("--config", sweep_args.config, "base train config JSON");
  sweep->add_option("--grid", sweep_args.grid,
                    "grid JSON {\"values\": [...]} (default per loss kind)");
  sweep->add_option("--tags", sweep_args.tags,
                    "challenge-set JSON naming validation hard ids")
      ->required();
  sweep->add_option("--n-seeds", sweep_args.n_seeds,
                    "seeds per grid value (default 3)");
  sweep->add_option("--out", sweep_args.out, "output report JSON")->required();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand(
      "predict", "Score a dataset with a trained model");
  predict->add_option("--model", predict_args.model, "model JSON")->required();
  predict->add_option("--data", predict_args.data, "dataset JSONL")->required();
  predict->add_option("--out", predict_args.out,
                      "output predictions JSONL")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand(
      "eval", "Evaluate predictions with the hard/easy metric breakdown");
  eval->add_option("--predictions", eval_args.predictions,
                   "predictions JSONL")->required();
  eval->add_option("--challenge-set", eval_args.challenge_set,
                   "challenge-set JSON")->required();
  eval->add_option("--bins", eval_args.bins, "ECE bin count (default 15)");
  eval->add_option("--out", eval_args.out, "output report JSON")->required();
  eval->add_option("--csv", eval_args.csv, "optional CSV table");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth-data", "Generate a spurious-correlation dataset with env labels");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--n", synth_args.n, "number of examples (default 1000)");
  synth->add_option("--core-strength", synth_args.core_strength,
                    "core signal strength (default 1.0)");
  synth->add_option("--spurious-strength", synth_args.spurious_strength,
                    "spurious signal strength (default 2.0)");
  synth->add_option("--minority-fraction", synth_args.minority_fraction,
                    "fraction where the spurious cue disagrees (default 0.05)");
  synth->add_option("--out", synth_args.out, "output JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return 2;
  }

  try {
    if (split->parsed()) return cmd_split(split_args);
    if (mine_ce->parsed()) return cmd_mine_ce(ce_args);
    if (mine_gist->parsed()) return cmd_mine_gist(gist_args);
    if (select->parsed()) return cmd_select_tasks(select_args);
    if (train->parsed()) return cmd_train(train_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (predict->parsed()) return cmd_predict(predict_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (synth->parsed()) return cmd_synth_data(synth_args);
  } catch (const oocforge::ComputeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
