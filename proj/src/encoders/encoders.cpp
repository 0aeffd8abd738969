#include "encoders/encoders.hpp"

#include "core/errors.hpp"
#include "encoders/capsule_ops.hpp"
#include "obsmodel/observation.hpp"

namespace topdown {

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "baseline") return EncoderKind::kBaseline;
  if (s == "conv3d") return EncoderKind::kConv3d;
  if (s == "conv2d1d") return EncoderKind::kConv2d1d;
  if (s == "capsule") return EncoderKind::kCapsule;
  throw ConfigError("unknown encoder: " + s + " (baseline|conv3d|conv2d1d|capsule)");
}

std::string encoder_kind_to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kBaseline: return "baseline";
    case EncoderKind::kConv3d: return "conv3d";
    case EncoderKind::kConv2d1d: return "conv2d1d";
    case EncoderKind::kCapsule: return "capsule";
  }
  return "?";
}

bool encoder_known_nonlearning(EncoderKind kind) { return kind == EncoderKind::kConv2d1d; }

Var Encoder::frame_features(const Var&) {
  throw ConfigError("frame_features is only available on the conv2d1d encoder");
}

namespace {

void check_stacked_input(const Var& input) {
  const Shape& s = input->value.shape();
  check_shape(s.size() == 4 && s[1] == kStackedChannels && s[2] == 64 && s[3] == 64,
              "encoder expects (N,63,64,64), got " + shape_to_string(s));
}

void check_volume_input(const Var& input) {
  const Shape& s = input->value.shape();
  check_shape(s.size() == 5 && s[1] == 3 && s[2] == kWindow && s[3] == 64 && s[4] == 64,
              "encoder expects (N,3,21,64,64), got " + shape_to_string(s));
}

// Nine 3x3 convs: strides 1,2 alternating over the first eight layers, then
// a final conv to 256 channels at 4x4. Flattens to 4096.
class ConvTower {
 public:
  ConvTower() = default;
  ConvTower(ParamStore& store, const std::string& name, int64_t in_ch,
            const std::vector<int64_t>& channels, Rng& init) {
    int64_t prev = in_ch;
    for (size_t i = 0; i < channels.size(); ++i) {
      int64_t stride = (i % 2 == 1) ? 2 : 1;
      convs_.emplace_back(store, name + ".conv" + std::to_string(i), prev, channels[i], 3,
                          stride, 1, init);
      prev = channels[i];
    }
    convs_.emplace_back(store, name + ".conv" + std::to_string(channels.size()), prev, 256, 3, 1,
                        1, init);
  }

  Var forward(const Var& x) const {
    Var h = x;
    for (const auto& conv : convs_) h = ops::leaky_relu(conv.forward(h), kLeakySlope);
    return ops::reshape(h, {h->value.dim(0), kStateFeatureDim});
  }

 private:
  std::vector<EqConv2d> convs_;
};

class BaselineEncoder : public Encoder {
 public:
  explicit BaselineEncoder(uint64_t seed) {
    Rng init = seed_stream(seed, "init/enc");
    tower_ = ConvTower(store_, "enc", kStackedChannels, {64, 64, 128, 128, 256, 256, 512, 512},
                       init);
  }

  EncoderKind kind() const override { return EncoderKind::kBaseline; }
  bool wants_volume() const override { return false; }

  Var forward(const Var& input) override {
    check_stacked_input(input);
    return tower_.forward(input);
  }

 private:
  ConvTower tower_;
};

// 3D convolutions with temporal kernel 3 (no temporal padding) and spatial
// kernel 4. Depth shrinks 21 -> 19 -> ... -> 5 across eight layers, then a
// final temporal-collapse layer removes the remaining depth.
class Conv3dEncoder : public Encoder {
 public:
  explicit Conv3dEncoder(uint64_t seed) {
    Rng init = seed_stream(seed, "init/enc");
    const std::vector<int64_t> channels = {32, 32, 64, 64, 128, 128, 256, 256};
    int64_t prev = 3;
    for (size_t i = 0; i < channels.size(); ++i) {
      ops::Conv3dSpec sp;
      sp.stride_d = 1;
      sp.pad_d_lo = sp.pad_d_hi = 0;  // no padding in the depth dimension
      if (i % 2 == 1) {
        sp.stride_h = sp.stride_w = 2;
        sp.pad_h_lo = sp.pad_h_hi = sp.pad_w_lo = sp.pad_w_hi = 1;
      } else {
        sp.stride_h = sp.stride_w = 1;
        // 4x4 kernel at stride 1 keeps the spatial size with (1,2) padding.
        sp.pad_h_lo = sp.pad_w_lo = 1;
        sp.pad_h_hi = sp.pad_w_hi = 2;
      }
      convs_.emplace_back(store_, "enc.conv" + std::to_string(i), prev, channels[i],
                          Shape{3, 4, 4}, sp, init);
      prev = channels[i];
    }
    ops::Conv3dSpec collapse;
    collapse.pad_h_lo = collapse.pad_h_hi = collapse.pad_w_lo = collapse.pad_w_hi = 1;
    convs_.emplace_back(store_, "enc.collapse", prev, 256, Shape{5, 3, 3}, collapse, init);
  }

  EncoderKind kind() const override { return EncoderKind::kConv3d; }
  bool wants_volume() const override { return true; }

  Var forward(const Var& input) override {
    check_volume_input(input);
    Var h = input;
    for (const auto& conv : convs_) h = ops::leaky_relu(conv.forward(h), kLeakySlope);
    const Shape& s = h->value.shape();
    check_shape(s[2] == 1, "conv3d encoder: depth did not collapse to 1");
    return ops::reshape(h, {s[0], kStateFeatureDim});
  }

 private:
  std::vector<EqConv3d> convs_;
};

// Per-frame 2D tower (shared weights) producing 21x4096 features, then two
// 1D temporal convolutions (4096 -> 1024 -> 4096, kernel 3) and a mean over
// the remaining time steps.
class Conv2d1dEncoder : public Encoder {
 public:
  explicit Conv2d1dEncoder(uint64_t seed) {
    Rng init = seed_stream(seed, "init/enc");
    tower_ = ConvTower(store_, "enc.tower", 3, {32, 32, 64, 64, 128, 128, 256, 256}, init);
    w1_ = store_.create("enc.time0.w", {1024, kStateFeatureDim, 1, 3}, init, 1.0f);
    b1_ = store_.create_zeros("enc.time0.b", {1024});
    w2_ = store_.create("enc.time1.w", {kStateFeatureDim, 1024, 1, 3}, init, 1.0f);
    b2_ = store_.create_zeros("enc.time1.b", {kStateFeatureDim});
    scale1_ = equalized_scale(kStateFeatureDim * 3, std::sqrt(2.0f));
    scale2_ = equalized_scale(1024 * 3, std::sqrt(2.0f));
  }

  EncoderKind kind() const override { return EncoderKind::kConv2d1d; }
  bool wants_volume() const override { return true; }

  // (N,3,21,S,S) -> (N,21,4096); shared per-frame weights.
  Var frame_features(const Var& input) override {
    check_volume_input(input);
    const Shape& s = input->value.shape();
    int64_t n = s[0];
    Var frames = ops::permute(input, {0, 2, 1, 3, 4});            // (N,21,3,S,S)
    frames = ops::reshape(frames, {n * kWindow, 3, s[3], s[4]});
    Var feats = tower_.forward(frames);                           // (N*21,4096)
    return ops::reshape(feats, {n, kWindow, kStateFeatureDim});
  }

  Var forward(const Var& input) override {
    Var feats = frame_features(input);
    int64_t n = feats->value.dim(0);
    // 1D convolution along time, phrased as a (1,3) 2D convolution.
    Var x = ops::permute(feats, {0, 2, 1});                       // (N,4096,21)
    x = ops::reshape(x, {n, kStateFeatureDim, 1, kWindow});
    ops::Conv2dSpec sp{1, 1, 0, 1};
    Var h = ops::conv2d(x, ops::mul_scalar(w1_, scale1_), sp);
    h = ops::add(h, ops::reshape(b1_, {1, 1024, 1, 1}));
    h = ops::leaky_relu(h, kLeakySlope);
    h = ops::conv2d(h, ops::mul_scalar(w2_, scale2_), sp);
    h = ops::add(h, ops::reshape(b2_, {1, kStateFeatureDim, 1, 1}));
    h = ops::leaky_relu(h, kLeakySlope);
    Var pooled = ops::reduce_mean(h, {2, 3}, /*keepdims=*/false);  // mean over time
    return ops::reshape(pooled, {n, kStateFeatureDim});
  }

 private:
  ConvTower tower_;
  Var w1_, b1_, w2_, b2_;
  float scale1_ = 1.0f, scale2_ = 1.0f;
};

// Convolutional capsule layer with local dynamic routing: each parent routes
// over the child capsules in its 3x3 receptive field; prediction weights and
// routing logits are shared across spatial positions.
class ConvCapsuleLayer {
 public:
  ConvCapsuleLayer() = default;
  ConvCapsuleLayer(ParamStore& store, const std::string& name, int64_t in_caps, int64_t in_dim,
                   int64_t out_caps, int64_t out_dim, int64_t stride, Rng& init)
      : in_caps_(in_caps), in_dim_(in_dim), out_caps_(out_caps), out_dim_(out_dim),
        stride_(stride) {
    weight_ = store.create(name + ".w", {in_caps * 9, out_caps * out_dim, in_dim}, init, 1.0f);
    scale_ = equalized_scale(in_dim, 1.0f);
  }

  // u: (N, in_caps, in_dim, H, W) -> (N, out_caps, out_dim, OH, OW)
  Var forward(const Var& u, int routing_iters) const {
    const Shape& s = u->value.shape();
    int64_t n = s[0], h = s[3], w = s[4];
    int64_t oh = (h + 2 - 3) / stride_ + 1, ow = (w + 2 - 3) / stride_ + 1;
    Var x = ops::reshape(u, {n, in_caps_ * in_dim_, h, w});
    ops::Conv2dSpec sp{stride_, stride_, 1, 1};
    Var patches = ops::unfold2d(x, 3, 3, sp);  // (N, in_caps*in_dim*9, P)
    int64_t p = oh * ow;
    patches = ops::reshape(patches, {n, in_caps_, in_dim_, 9, p});
    patches = ops::permute(patches, {0, 1, 3, 2, 4});            // (N,C,9,D,P)
    patches = ops::reshape(patches, {n, in_caps_ * 9, in_dim_, p});
    Var wmat = ops::broadcast_to(ops::mul_scalar(weight_, scale_),
                                 {n, in_caps_ * 9, out_caps_ * out_dim_, in_dim_});
    Var u_hat = ops::batched_matmul(wmat, patches);              // (N,CK,J*D,P)
    u_hat = ops::reshape(u_hat, {n, in_caps_ * 9, out_caps_, out_dim_, p});
    Var v = dynamic_routing(u_hat, routing_iters);               // (N,J,D,P)
    return ops::reshape(v, {n, out_caps_, out_dim_, oh, ow});
  }

 private:
  Var weight_;
  int64_t in_caps_ = 0, in_dim_ = 0, out_caps_ = 0, out_dim_ = 0, stride_ = 1;
  float scale_ = 1.0f;
};

// Conv + LeakyReLU, then three convolutional capsule layers:
// Caps1 32x8d (primary, squash only), Caps2 16x8d, Caps3 1x16d at 16x16,
// flattened to exactly 16*16*16 = 4096.
class CapsuleEncoder : public Encoder {
 public:
  explicit CapsuleEncoder(uint64_t seed) {
    Rng init = seed_stream(seed, "init/enc");
    conv1_ = EqConv2d(store_, "enc.conv1", kStackedChannels, 128, 3, 2, 1, init);
    primary_ = EqConv2d(store_, "enc.primary", 128, 32 * 8, 3, 1, 1, init);
    caps2_ = ConvCapsuleLayer(store_, "enc.caps2", 32, 8, 16, 8, 2, init);
    caps3_ = ConvCapsuleLayer(store_, "enc.caps3", 16, 8, 1, 16, 1, init);
  }

  EncoderKind kind() const override { return EncoderKind::kCapsule; }
  bool wants_volume() const override { return false; }

  Var forward(const Var& input) override {
    check_stacked_input(input);
    int64_t n = input->value.dim(0);
    Var h = ops::leaky_relu(conv1_.forward(input), kLeakySlope);  // (N,128,32,32)
    Var caps1 = primary_.forward(h);                              // (N,256,32,32)
    caps1 = ops::reshape(caps1, {n, 32, 8, 32, 32});
    caps1 = ops::squash(caps1, 2);
    Var caps2 = caps2_.forward(caps1, kRoutingIters);             // (N,16,8,16,16)
    Var caps3 = caps3_.forward(caps2, kRoutingIters);             // (N,1,16,16,16)
    return ops::reshape(caps3, {n, kStateFeatureDim});
  }

  static constexpr int kRoutingIters = 3;

 private:
  EqConv2d conv1_, primary_;
  ConvCapsuleLayer caps2_, caps3_;
};

}  // namespace

std::unique_ptr<Encoder> make_encoder(EncoderKind kind, uint64_t seed) {
  switch (kind) {
    case EncoderKind::kBaseline: return std::make_unique<BaselineEncoder>(seed);
    case EncoderKind::kConv3d: return std::make_unique<Conv3dEncoder>(seed);
    case EncoderKind::kConv2d1d: return std::make_unique<Conv2d1dEncoder>(seed);
    case EncoderKind::kCapsule: return std::make_unique<CapsuleEncoder>(seed);
  }
  throw ConfigError("bad encoder kind");
}

}  // namespace topdown
