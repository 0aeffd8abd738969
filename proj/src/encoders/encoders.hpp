#pragma once

#include <memory>
#include <string>

#include "nn/layers.hpp"

namespace topdown {

inline constexpr int64_t kStateFeatureDim = 4096;

enum class EncoderKind { kBaseline, kConv3d, kConv2d1d, kCapsule };

EncoderKind encoder_kind_from_string(const std::string& s);
std::string encoder_kind_to_string(EncoderKind kind);
// The 2D+1D variant trains without learning; kept for comparison runs.
bool encoder_known_nonlearning(EncoderKind kind);

// Maps an observation window to the 4096-dim state feature vector consumed
// by the generator. Stacked-input encoders take (N,63,S,S); volumetric ones
// take (N,3,21,S,S).
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncoderKind kind() const = 0;
  virtual bool wants_volume() const = 0;
  virtual Var forward(const Var& input) = 0;
  // 2D+1D only: the per-frame (N, 21, 4096) feature map ahead of the
  // temporal head.
  virtual Var frame_features(const Var& input);
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

 protected:
  ParamStore store_;
};

std::unique_ptr<Encoder> make_encoder(EncoderKind kind, uint64_t seed);

}  // namespace topdown
