#pragma once

#include <string>
#include <vector>

#include "metrics/evaluate.hpp"
#include "trainer/train_config.hpp"

namespace topdown {

struct GenDataArgs {
  std::string out;
  uint64_t seed = 1;
  int train_envs = 64;
  int test_envs = 16;
  int episodes_per_env = 1;
  int episode_len = 40;
  std::string policy = "fixed";
  double room_size = 8.0;
  double fov_deg = 60.0;
  bool force = false;
};
int run_gen_data(const GenDataArgs& args);

// config resolved by the caller (defaults < config file < CLI flags)
int run_train(const TrainConfig& config);

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string data_root;
  std::string out;
  int64_t max_pairs = 512;
  uint64_t eval_seed = 2024;
  bool oracle = false;  // debug: ground-truth generator row
  uint64_t seed = 1;
};
int run_eval(const EvalArgs& args);

struct SampleArgs {
  std::string checkpoint;
  std::string data_root;
  std::string out;  // output png path
  std::string split = "train";
  int episode = 0;
  std::vector<int> steps;
  uint64_t seed = 1;
};
int run_sample(const SampleArgs& args);

// Rebuilds encoder + generator from a checkpoint (evaluation/sampling).
struct LoadedModel {
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<Generator> generator;
  ScaleState state;
  std::string encoder_kind;
};
LoadedModel load_model_for_eval(const std::string& checkpoint_dir);

}  // namespace topdown
