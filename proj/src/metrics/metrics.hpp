#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "core/tensor.hpp"

namespace topdown {

// Image quality metrics, computed in double precision. Images are CHW float
// tensors; PSNR runs over all pixels and channels, SSIM over the BT.601 luma
// channel.

// 10*log10(max_val^2 / MSE); identical images return +infinity.
double psnr(const Tensor& a, const Tensor& b, double max_val);

inline bool psnr_is_infinite(double v) { return std::isinf(v); }

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double luminance_range = 1.0;  // L
};

// Standard single-scale SSIM with a Gaussian window over valid positions
// (no padding). Requires both spatial dims >= window.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

// BT.601 luma plane of a (3,H,W) tensor, in doubles.
std::vector<double> to_luma(const Tensor& rgb);

// Streaming mean/std with compensated (Kahan) accumulation.
class RunningStat {
 public:
  void add(double v);
  int64_t count() const { return count_; }
  double mean() const;
  double stddev() const;  // population

 private:
  int64_t count_ = 0;
  double sum_ = 0.0, sum_c_ = 0.0;
  double sq_ = 0.0, sq_c_ = 0.0;
};

}  // namespace topdown
