#pragma once

#include "encoders/encoders.hpp"
#include "gan/scale_state.hpp"
#include "nn/layers.hpp"

namespace topdown {

// Progressive conditional generator. The 4096 state features are reshaped to
// a 4x4x256 base (no learned projection); each scale block is two 3x3 convs
// with LeakyReLU and pixelwise feature normalization, preceded by nearest
// upsampling; per-scale 1x1 toRGB adapters produce the image. During fade-in
// the output blends the new block's toRGB with the upsampled previous one.
class Generator {
 public:
  explicit Generator(uint64_t seed);

  // Registers the next block + adapter. new_scale must double the currently
  // built scale and stay within 64.
  void grow(int new_scale);
  int built_scale() const { return built_scale_; }

  // features: (N, 4096) -> image (N, 3, scale, scale)
  Var generate(const Var& features, const ScaleState& state) const;

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

 private:
  struct Block {
    EqConv2d conv0, conv1;
  };
  Var run_block(const Block& b, const Var& x) const;

  uint64_t seed_;
  int built_scale_ = 0;
  std::vector<Block> blocks_;    // index k handles scale 4*2^k
  std::vector<EqConv2d> to_rgb_;
  ParamStore store_;
};

}  // namespace topdown
