#pragma once

#include "gan/scale_state.hpp"
#include "nn/layers.hpp"
#include "obsmodel/observation.hpp"

namespace topdown {

// Progressive conditional critic. The 63-channel observation stack is
// area-downsampled to the active scale and concatenated with the image to a
// 66-channel input ahead of the per-scale fromRGB adapter. Blocks mirror the
// generator; a minibatch-stddev channel is inserted before the final 4x4
// block. The score head is linear (Wasserstein critic, no sigmoid).
class Discriminator {
 public:
  explicit Discriminator(uint64_t seed);

  void grow(int new_scale);
  int built_scale() const { return built_scale_; }

  // image: (N,3,s,s), condition: (N,63,64,64) -> scores (N)
  Var discriminate(const Var& image, const Var& condition, const ScaleState& state) const;

  // Input channel count of every fromRGB adapter (condition + RGB).
  int64_t input_channels() const { return kStackedChannels + 3; }

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

 private:
  struct Block {
    EqConv2d conv0, conv1;
  };
  Var run_final(const Var& x) const;

  uint64_t seed_;
  int built_scale_ = 0;
  std::vector<EqConv2d> from_rgb_;  // index k serves scale 4*2^k
  std::vector<Block> blocks_;       // blocks_[0] unused; block k downsamples stage k
  EqConv2d final_conv0_, final_conv1_;
  EqLinear score_;
  ParamStore store_;
};

}  // namespace topdown
