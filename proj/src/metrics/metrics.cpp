#include "metrics/metrics.hpp"

#include <cmath>
#include <vector>

#include "core/errors.hpp"

namespace topdown {

double psnr(const Tensor& a, const Tensor& b, double max_val) {
  check_shape(a.shape() == b.shape(), "psnr: shape mismatch");
  if (max_val <= 0.0) throw ConfigError("psnr: max_val must be positive");
  const float* pa = a.data();
  const float* pb = b.data();
  double mse = 0.0, c = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    // Kahan-compensated accumulation keeps the sum order-stable.
    double y = d * d - c;
    double t = mse + y;
    c = (t - mse) - y;
    mse = t;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

std::vector<double> to_luma(const Tensor& rgb) {
  check_shape(rgb.ndim() == 3 && rgb.dim(0) == 3, "to_luma: expects (3,H,W)");
  const int64_t hw = rgb.dim(1) * rgb.dim(2);
  const float* p = rgb.data();
  std::vector<double> luma(static_cast<size_t>(hw));
  for (int64_t i = 0; i < hw; ++i) {
    luma[static_cast<size_t>(i)] =
        0.299 * p[i] + 0.587 * p[hw + i] + 0.114 * p[2 * hw + i];
  }
  return luma;
}

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(static_cast<size_t>(window) * window);
  double sum = 0.0;
  double c = (window - 1) / 2.0;
  for (int i = 0; i < window; ++i) {
    for (int j = 0; j < window; ++j) {
      double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      double v = std::exp(-d2 / (2.0 * sigma * sigma));
      k[static_cast<size_t>(i) * window + j] = v;
      sum += v;
    }
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimParams& params) {
  check_shape(a.shape() == b.shape(), "ssim: shape mismatch");
  std::vector<double> xa, xb;
  int64_t h, w;
  if (a.ndim() == 3 && a.dim(0) == 3) {
    xa = to_luma(a);
    xb = to_luma(b);
    h = a.dim(1);
    w = a.dim(2);
  } else if (a.ndim() == 2) {
    h = a.dim(0);
    w = a.dim(1);
    xa.assign(a.data(), a.data() + a.size());
    xb.assign(b.data(), b.data() + b.size());
  } else {
    throw ShapeError("ssim: expects (3,H,W) or (H,W)");
  }
  const int win = params.window;
  if (h < win || w < win) throw ShapeError("ssim: image smaller than window");

  const auto kernel = gaussian_kernel(win, params.sigma);
  const double c1 = (params.k1 * params.luminance_range) * (params.k1 * params.luminance_range);
  const double c2 = (params.k2 * params.luminance_range) * (params.k2 * params.luminance_range);

  double total = 0.0, comp = 0.0;
  int64_t count = 0;
  for (int64_t r = 0; r + win <= h; ++r) {
    for (int64_t cpos = 0; cpos + win <= w; ++cpos) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          double kw = kernel[static_cast<size_t>(i) * win + j];
          double va = xa[static_cast<size_t>((r + i) * w + cpos + j)];
          double vb = xb[static_cast<size_t>((r + i) * w + cpos + j)];
          mx += kw * va;
          my += kw * vb;
          sxx += kw * va * va;
          syy += kw * vb * vb;
          sxy += kw * va * vb;
        }
      }
      double vx = sxx - mx * mx;
      double vy = syy - my * my;
      double cov = sxy - mx * my;
      double val = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
      double y = val - comp;
      double t = total + y;
      comp = (t - total) - y;
      total = t;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

void RunningStat::add(double v) {
  ++count_;
  double y = v - sum_c_;
  double t = sum_ + y;
  sum_c_ = (t - sum_) - y;
  sum_ = t;
  double y2 = v * v - sq_c_;
  double t2 = sq_ + y2;
  sq_c_ = (t2 - sq_) - y2;
  sq_ = t2;
}

double RunningStat::mean() const { return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_); }

double RunningStat::stddev() const {
  if (count_ == 0) return 0.0;
  double m = mean();
  double var = sq_ / static_cast<double>(count_) - m * m;
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace topdown
