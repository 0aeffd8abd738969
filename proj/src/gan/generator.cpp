#include "gan/generator.hpp"

namespace topdown {

Generator::Generator(uint64_t seed) : seed_(seed) { grow(kBaseScale); }

void Generator::grow(int new_scale) {
  if (built_scale_ == 0) {
    if (new_scale != kBaseScale) throw ConfigError("generator must start at scale 4");
  } else {
    if (new_scale != built_scale_ * 2)
      throw ConfigError("grow must double the scale (" + std::to_string(built_scale_) + " -> " +
                        std::to_string(new_scale) + ")");
    if (new_scale > kFullScale) throw ConfigError("cannot grow past 64");
  }
  int k = scale_stage(new_scale);
  int64_t in_ch = k == 0 ? scale_channels(kBaseScale) : scale_channels(new_scale / 2);
  int64_t ch = scale_channels(new_scale);
  std::string prefix = "gen.block" + std::to_string(new_scale);
  Rng init = seed_stream(seed_, "init/gen/block", static_cast<uint64_t>(k));
  Block b;
  b.conv0 = EqConv2d(store_, prefix + ".conv0", in_ch, ch, 3, 1, 1, init);
  b.conv1 = EqConv2d(store_, prefix + ".conv1", ch, ch, 3, 1, 1, init);
  blocks_.push_back(b);
  to_rgb_.emplace_back(store_, "gen.torgb" + std::to_string(new_scale), ch, 3, 1, 1, 0, init,
                       /*gain=*/1.0f);
  built_scale_ = new_scale;
}

Var Generator::run_block(const Block& b, const Var& x) const {
  Var h = ops::pixelwise_norm(ops::leaky_relu(b.conv0.forward(x), kLeakySlope), kPixelNormEps);
  h = ops::pixelwise_norm(ops::leaky_relu(b.conv1.forward(h), kLeakySlope), kPixelNormEps);
  return h;
}

Var Generator::generate(const Var& features, const ScaleState& state) const {
  validate_scale_state(state);
  const Shape& fs = features->value.shape();
  check_shape(fs.size() == 2 && fs[1] == kStateFeatureDim,
              "generator expects (N,4096) features, got " + shape_to_string(fs));
  if (state.scale > built_scale_)
    throw ConfigError("generator not grown to scale " + std::to_string(state.scale));

  int64_t n = fs[0];
  Var x = ops::reshape(features, {n, scale_channels(kBaseScale), 4, 4});
  const int target_stage = scale_stage(state.scale);

  x = run_block(blocks_[0], x);
  if (target_stage == 0) return to_rgb_[0].forward(x);

  for (int k = 1; k < target_stage; ++k) x = run_block(blocks_[static_cast<size_t>(k)], x);

  // x now carries the previous stage's features.
  Var up = ops::upsample_nearest2x(x);
  const Block& top = blocks_[static_cast<size_t>(target_stage)];
  if (state.alpha >= 1.0) return to_rgb_[static_cast<size_t>(target_stage)].forward(run_block(top, up));

  Var old_rgb = ops::upsample_nearest2x(to_rgb_[static_cast<size_t>(target_stage - 1)].forward(x));
  if (state.alpha <= 0.0) return old_rgb;

  Var new_rgb = to_rgb_[static_cast<size_t>(target_stage)].forward(run_block(top, up));
  float a = static_cast<float>(state.alpha);
  return ops::add(ops::mul_scalar(new_rgb, a), ops::mul_scalar(old_rgb, 1.0f - a));
}

}  // namespace topdown
