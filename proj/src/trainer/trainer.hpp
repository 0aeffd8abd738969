#pragma once

#include <fstream>
#include <memory>

#include "gan/discriminator.hpp"
#include "gan/generator.hpp"
#include "losses/wgan.hpp"
#include "nn/adam.hpp"
#include "trainer/data_source.hpp"
#include "trainer/train_config.hpp"

namespace topdown {

// Owns the models, optimizers and random streams of one training run. A
// single logical thread drives all updates; batch order, epsilon draws and
// parameter init all derive from the root seed, so a fixed seed reproduces
// the run log exactly.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const LoadedDataset* dataset);

  // Restores parameters, optimizer moments, rng streams and the iteration
  // counter; the schedule then continues as if uninterrupted.
  void resume_from(const std::string& checkpoint_dir);

  // One critic + generator update at the current iteration. Grows the
  // networks when the schedule crosses a scale boundary.
  LossReport step();

  // Full loop: logging, cadence + boundary checkpoints, faults.
  void run();

  int64_t iteration() const { return iteration_; }
  Generator& generator() { return *gen_; }
  Discriminator& discriminator() { return *disc_; }
  Encoder& encoder() { return *enc_; }
  const TrainConfig& config() const { return config_; }
  ScaleState current_state() const;

  std::vector<Var> g_side_params() const;  // encoder + generator
  const std::vector<Var>& d_side_params() const;

  void write_checkpoint_dir(const std::string& dir) const;

  // Exposed for the update-partitioning tests.
  LossReport critic_update(const Var& real, const Var& fake_detached, const Var& condition,
                           const ScaleState& st);
  double generator_update(const Var& fake, const Var& condition, const ScaleState& st);

 private:
  void maybe_grow(int scale);
  Var encode_batch(const std::vector<TrainPair>& pairs);
  void append_log(const LossReport& report, const ScaleState& st);

  TrainConfig config_;
  const LoadedDataset* dataset_;
  DataSource train_src_;
  std::unique_ptr<Encoder> enc_;
  std::unique_ptr<Generator> gen_;
  std::unique_ptr<Discriminator> disc_;
  Adam adam_g_;
  Adam adam_d_;
  Rng sampler_rng_;
  Rng gp_rng_;
  int64_t iteration_ = 0;
  std::ofstream log_;
};

}  // namespace topdown
