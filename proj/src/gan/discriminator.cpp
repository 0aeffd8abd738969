#include "gan/discriminator.hpp"

namespace topdown {

Discriminator::Discriminator(uint64_t seed) : seed_(seed) {
  Rng init = seed_stream(seed_, "init/disc/final");
  // Final 4x4 block: stddev channel, 3x3 conv, 4x4 valid conv, linear score.
  int64_t ch = scale_channels(kBaseScale);
  final_conv0_ = EqConv2d(store_, "disc.final.conv0", ch + 1, ch, 3, 1, 1, init);
  final_conv1_ = EqConv2d(store_, "disc.final.conv1", ch, ch, 4, 1, 0, init);
  score_ = EqLinear(store_, "disc.final.score", ch, 1, init, /*gain=*/1.0f);
  grow(kBaseScale);
}

void Discriminator::grow(int new_scale) {
  if (built_scale_ == 0) {
    if (new_scale != kBaseScale) throw ConfigError("discriminator must start at scale 4");
  } else {
    if (new_scale != built_scale_ * 2)
      throw ConfigError("grow must double the scale (" + std::to_string(built_scale_) + " -> " +
                        std::to_string(new_scale) + ")");
    if (new_scale > kFullScale) throw ConfigError("cannot grow past 64");
  }
  int k = scale_stage(new_scale);
  Rng init = seed_stream(seed_, "init/disc/block", static_cast<uint64_t>(k));
  std::string suffix = std::to_string(new_scale);
  from_rgb_.emplace_back(store_, "disc.fromrgb" + suffix, input_channels(), scale_channels(new_scale),
                         1, 1, 0, init);
  Block b;
  if (k > 0) {
    int64_t ch = scale_channels(new_scale);
    int64_t out_ch = scale_channels(new_scale / 2);
    b.conv0 = EqConv2d(store_, "disc.block" + suffix + ".conv0", ch, ch, 3, 1, 1, init);
    b.conv1 = EqConv2d(store_, "disc.block" + suffix + ".conv1", ch, out_ch, 3, 1, 1, init);
  }
  blocks_.push_back(b);
  built_scale_ = new_scale;
}

Var Discriminator::run_final(const Var& x) const {
  Var h = ops::minibatch_stddev(x);
  h = ops::leaky_relu(final_conv0_.forward(h), kLeakySlope);
  h = ops::leaky_relu(final_conv1_.forward(h), kLeakySlope);  // (N, ch, 1, 1)
  h = ops::reshape(h, {h->value.dim(0), h->value.dim(1)});
  Var s = score_.forward(h);  // (N, 1)
  return ops::reshape(s, {s->value.dim(0)});
}

Var Discriminator::discriminate(const Var& image, const Var& condition,
                                const ScaleState& state) const {
  validate_scale_state(state);
  const Shape& is = image->value.shape();
  const Shape& cs = condition->value.shape();
  check_shape(is.size() == 4 && is[1] == 3 && is[2] == state.scale && is[3] == state.scale,
              "discriminator image must be (N,3," + std::to_string(state.scale) + "," +
                  std::to_string(state.scale) + "), got " + shape_to_string(is));
  check_shape(cs.size() == 4 && cs[1] == kStackedChannels && cs[2] == 64 && cs[3] == 64,
              "discriminator condition must be (N,63,64,64), got " + shape_to_string(cs));
  check_shape(is[0] == cs[0], "discriminator: batch mismatch");
  if (state.scale > built_scale_)
    throw ConfigError("discriminator not grown to scale " + std::to_string(state.scale));

  // Condition pyramid: repeated 2x2 average pooling down to the active scale.
  Var cond = condition;
  while (cond->value.dim(2) > state.scale) cond = ops::downsample_avg2x(cond);

  const int stage = scale_stage(state.scale);
  Var h = ops::leaky_relu(
      from_rgb_[static_cast<size_t>(stage)].forward(ops::concat({image, cond}, 1)), kLeakySlope);

  int k = stage;
  if (k > 0) {
    const Block& top = blocks_[static_cast<size_t>(k)];
    h = ops::leaky_relu(top.conv0.forward(h), kLeakySlope);
    h = ops::leaky_relu(top.conv1.forward(h), kLeakySlope);
    h = ops::downsample_avg2x(h);
    if (state.alpha < 1.0) {
      Var img_small = ops::downsample_avg2x(image);
      Var cond_small = ops::downsample_avg2x(cond);
      Var old = ops::leaky_relu(
          from_rgb_[static_cast<size_t>(k - 1)].forward(ops::concat({img_small, cond_small}, 1)),
          kLeakySlope);
      if (state.alpha <= 0.0) {
        h = old;
      } else {
        float a = static_cast<float>(state.alpha);
        h = ops::add(ops::mul_scalar(h, a), ops::mul_scalar(old, 1.0f - a));
      }
    }
    for (k = stage - 1; k >= 1; --k) {
      const Block& b = blocks_[static_cast<size_t>(k)];
      h = ops::leaky_relu(b.conv0.forward(h), kLeakySlope);
      h = ops::leaky_relu(b.conv1.forward(h), kLeakySlope);
      h = ops::downsample_avg2x(h);
    }
  }
  return run_final(h);
}

}  // namespace topdown
