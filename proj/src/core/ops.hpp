#pragma once

#include <vector>

#include "core/autograd.hpp"

namespace topdown {
namespace ops {

// Elementwise. Binary ops broadcast the smaller operand (numpy rules).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var neg(const Var& a);
Var add_scalar(const Var& a, float s);
Var mul_scalar(const Var& a, float s);
// Elementwise power; x must be positive wherever p-1 < 0 paths are exercised.
Var pow_scalar(const Var& a, float p);
Var exp(const Var& a);
Var leaky_relu(const Var& a, float slope);

// Shape ops.
Var reshape(const Var& a, Shape shape);
Var broadcast_to(const Var& a, Shape shape);
Var reduce_sum(const Var& a, std::vector<int> axes, bool keepdims);
Var reduce_mean(const Var& a, std::vector<int> axes, bool keepdims);
Var slice(const Var& a, int axis, int64_t start, int64_t len);
Var concat(const std::vector<Var>& parts, int axis);
Var permute(const Var& a, std::vector<int> order);

// Linear algebra.
Var matmul(const Var& a, const Var& b);            // (M,K)x(K,N)
Var transpose2d(const Var& a);                     // (M,N)->(N,M)
// Batched matmul over identical leading dims: (...,M,K)x(...,K,N).
Var batched_matmul(const Var& a, const Var& b);
Var transpose_last2(const Var& a);

// Convolutions, NCHW / NCDHW. Padding is zero padding, (lo,hi) per axis.
struct Conv2dSpec {
  int64_t stride_h = 1, stride_w = 1;
  int64_t pad_h = 0, pad_w = 0;
};
Var conv2d(const Var& x, const Var& w, const Conv2dSpec& spec);
Var conv2d_data_grad(const Var& gy, const Var& w, Shape x_shape, const Conv2dSpec& spec);
Var conv2d_weight_grad(const Var& gy, const Var& x, Shape w_shape, const Conv2dSpec& spec);

struct Conv3dSpec {
  int64_t stride_d = 1, stride_h = 1, stride_w = 1;
  int64_t pad_d_lo = 0, pad_d_hi = 0;
  int64_t pad_h_lo = 0, pad_h_hi = 0;
  int64_t pad_w_lo = 0, pad_w_hi = 0;
};
Var conv3d(const Var& x, const Var& w, const Conv3dSpec& spec);
Var conv3d_data_grad(const Var& gy, const Var& w, Shape x_shape, const Conv3dSpec& spec);
Var conv3d_weight_grad(const Var& gy, const Var& x, Shape w_shape, const Conv3dSpec& spec);

// Patch extraction (im2col as a graph op): (N,C,H,W) -> (N, C*kh*kw, OH*OW).
Var unfold2d(const Var& x, int64_t kh, int64_t kw, const Conv2dSpec& spec);

// Resampling, NCHW.
Var upsample_nearest2x(const Var& a);
Var downsample_avg2x(const Var& a);

// Composites.
Var softmax(const Var& a, int axis);
Var pixelwise_norm(const Var& a, float epsilon);        // NCHW, normalizes C
Var minibatch_stddev(const Var& a);                     // NCHW, appends 1 channel
Var squash(const Var& a, int axis);                     // capsule nonlinearity
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// Utilities.
Var constant_like(const Var& a, float value);
Tensor downsample_avg_to(const Tensor& img, int64_t target_hw);  // repeated 2x avg, NCHW

}  // namespace ops
}  // namespace topdown
