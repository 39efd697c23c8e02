#pragma once

#include <cstdint>
#include <string>

namespace oocforge::cli {

struct SplitArgs {
  std::string annotations;
  std::string ratios = "0.7,0.1,0.2";
  std::uint64_t seed = 0;
  std::string out;
};

struct MineCeArgs {
  std::string annotations;
  std::string split;
  std::string task;  // empty with all_tasks
  bool all_tasks = false;
  double alpha = 0.05;
  double beta = 0.1;
  std::string eval_split = "test";
  std::string out;
  int jobs = 1;
};

struct MineGistArgs {
  std::string annotations;
  std::string split;
  std::string embeddings;
  std::string ce_dir;
  std::string task;  // optional filter
  std::string out;
  int jobs = 1;
};

struct SelectArgs {
  std::string scores;
  std::uint64_t min_hard = 50;
  std::uint64_t k = 12;
  std::string exclude = "sheep,handbag,bottle,wine-glass";
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string valid_data;
  std::string config;  // optional; defaults otherwise
  std::string out;
};

struct SweepArgs {
  std::string data;
  std::string valid_data;
  std::string config;
  std::string grid;  // optional; per-loss default grid otherwise
  std::string tags;
  std::string out;
  int n_seeds = 3;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

struct EvalArgs {
  std::string predictions;
  std::string challenge_set;
  int bins = 15;
  std::string out;
  std::string csv;  // optional
};

struct SynthArgs {
  std::uint64_t seed = 0;
  std::uint64_t n = 1000;
  double core_strength = 1.0;
  double spurious_strength = 2.0;
  double minority_fraction = 0.05;
  std::string out;
};

int cmd_split(const SplitArgs& args);
int cmd_mine_ce(const MineCeArgs& args);
int cmd_mine_gist(const MineGistArgs& args);
int cmd_select_tasks(const SelectArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_sweep(const SweepArgs& args);
int cmd_predict(const PredictArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_synth_data(const SynthArgs& args);

}  // namespace oocforge::cli
