#pragma once

#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "envgen/dataset.hpp"

namespace topdown {

struct TrainPair {
  int episode = 0;
  int step = 0;
};

// Batch assembly over one loaded split. Re-stacks observation windows on the
// fly; episodes stay in 8-bit form between batches.
class DataSource {
 public:
  DataSource(const std::vector<LoadedEpisode>* episodes);

  int64_t pair_count() const { return pair_count_; }
  const std::vector<LoadedEpisode>& episodes() const { return *episodes_; }

  // n distinct pairs, order and content a pure function of the rng state.
  std::vector<TrainPair> sample_batch(int n, Rng& rng) const;
  TrainPair pair_at(int64_t flat_index) const;

  // (N,63,64,64) stacked conditions.
  Tensor conditions(const std::vector<TrainPair>& pairs) const;
  // (N,3,21,64,64) volumes for the volumetric encoders.
  Tensor volumes(const std::vector<TrainPair>& pairs) const;
  // (N,3,64,64) ground-truth top-down targets.
  Tensor targets(const std::vector<TrainPair>& pairs) const;

 private:
  const std::vector<LoadedEpisode>* episodes_;
  std::vector<int64_t> offsets_;  // cumulative steps per episode
  int64_t pair_count_ = 0;
};

}  // namespace topdown
