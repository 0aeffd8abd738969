#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"

namespace topdown {

inline constexpr float kLeakySlope = 0.2f;
inline constexpr float kPixelNormEps = 1e-8f;

// Runtime weight multiplier for the equalized learning rate scheme: weights
// are stored at unit variance and scaled by gain/sqrt(fan_in) on use.
float equalized_scale(int64_t fan_in, float gain);

// Named trainable parameters, in registration order. Registration order is
// part of the checkpoint/optimizer contract, so modules must register
// deterministically.
class ParamStore {
 public:
  Var create(const std::string& name, Shape shape, Rng& init, float stddev);
  Var create_zeros(const std::string& name, Shape shape);
  const std::vector<Var>& params() const { return params_; }
  Var find(const std::string& name) const;
  int64_t total_size() const;
  void zero_grads() const;

 private:
  std::vector<Var> params_;
};

// 2D convolution with equalized learning rate and bias.
class EqConv2d {
 public:
  EqConv2d() = default;
  EqConv2d(ParamStore& store, const std::string& name, int64_t in_ch, int64_t out_ch,
           int64_t kernel, int64_t stride, int64_t pad, Rng& init, float gain = std::sqrt(2.0f));
  Var forward(const Var& x) const;
  int64_t in_channels() const { return in_ch_; }

 private:
  Var weight_, bias_;
  ops::Conv2dSpec spec_;
  int64_t in_ch_ = 0;
  float scale_ = 1.0f;
};

// 3D convolution with equalized learning rate, per-axis (lo,hi) padding.
class EqConv3d {
 public:
  EqConv3d() = default;
  EqConv3d(ParamStore& store, const std::string& name, int64_t in_ch, int64_t out_ch,
           const Shape& kernel_dhw, const ops::Conv3dSpec& spec, Rng& init,
           float gain = std::sqrt(2.0f));
  Var forward(const Var& x) const;

 private:
  Var weight_, bias_;
  ops::Conv3dSpec spec_;
  float scale_ = 1.0f;
};

class EqLinear {
 public:
  EqLinear() = default;
  EqLinear(ParamStore& store, const std::string& name, int64_t in_dim, int64_t out_dim, Rng& init,
           float gain = std::sqrt(2.0f));
  Var forward(const Var& x) const;  // (N, in) -> (N, out)

 private:
  Var weight_, bias_;
  float scale_ = 1.0f;
};

}  // namespace topdown
