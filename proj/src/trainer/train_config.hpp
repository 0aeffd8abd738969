#pragma once

#include <map>
#include <string>

#include "trainer/schedule.hpp"

namespace topdown {

// Full training run configuration. Defaults follow the progressive-growing
// recipe (Adam 1e-3, betas (0.0, 0.99), one critic step per generator step,
// gradient-penalty coefficient 10); every value can be overridden via config
// file or CLI flag.
struct TrainConfig {
  std::string encoder = "baseline";
  int batch_size = 16;
  ScaleSchedule schedule;
  int64_t total_iterations = 0;  // 0 = schedule.total_iterations()
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  double lambda_gp = 10.0;
  double drift_epsilon = 1e-3;
  bool use_drift = false;
  int critic_steps = 1;
  uint64_t seed = 1;
  std::string data_root;
  std::string out_dir;
  int64_t checkpoint_every = 0;  // 0 = iterations_per_scale / 2
  bool deterministic = false;
  std::string resume;  // checkpoint directory to continue from

  int64_t effective_total_iterations() const;
  int64_t effective_checkpoint_every() const;
  void validate() const;
};

// Named profiles: "paper" (25,000/12,500 up to 64) and "desk" (500/250 up to
// 32, for the smoke suites).
TrainConfig profile_config(const std::string& name);

// key = value lines, '#' comments. Unknown keys are errors.
std::map<std::string, std::string> read_config_file(const std::string& path);
void apply_key_value(TrainConfig* config, const std::string& key, const std::string& value);

// Resolved key=value view (startup print, run manifest).
std::map<std::string, std::string> config_as_map(const TrainConfig& config);

}  // namespace topdown
