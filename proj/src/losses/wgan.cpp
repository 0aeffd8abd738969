#include "losses/wgan.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace topdown {

bool LossReport::all_finite() const {
  return std::isfinite(d_loss) && std::isfinite(g_loss) && std::isfinite(wasserstein_estimate) &&
         std::isfinite(gradient_penalty_term) && std::isfinite(grad_norm_mean);
}

namespace {

void check_scores(const Var& scores, const char* which) {
  check_shape(scores->value.ndim() == 1, std::string(which) + " scores must be rank 1");
  if (scores->value.size() == 0) throw ConfigError(std::string("empty ") + which + " score batch");
}

}  // namespace

Var wgan_d_loss(const Var& real_scores, const Var& fake_scores) {
  check_scores(real_scores, "real");
  check_scores(fake_scores, "fake");
  return ops::sub(ops::mean_all(fake_scores), ops::mean_all(real_scores));
}

Var wgan_g_loss(const Var& fake_scores) {
  check_scores(fake_scores, "fake");
  return ops::neg(ops::mean_all(fake_scores));
}

Var interpolate_pairs(const Var& real, const Var& fake, const std::vector<float>& eps) {
  const Shape& rs = real->value.shape();
  check_shape(rs == fake->value.shape(), "interpolate_pairs: shape mismatch");
  check_shape(static_cast<int64_t>(eps.size()) == rs[0], "interpolate_pairs: need one eps per pair");
  Tensor out(rs);
  const int64_t stride = out.size() / rs[0];
  const float* pr = real->value.data();
  const float* pf = fake->value.data();
  float* po = out.data();
  for (int64_t n = 0; n < rs[0]; ++n) {
    const float e = eps[static_cast<size_t>(n)];
    for (int64_t i = 0; i < stride; ++i) {
      int64_t idx = n * stride + i;
      po[idx] = e * pr[idx] + (1.0f - e) * pf[idx];
    }
  }
  return make_param(std::move(out), "x_hat");
}

GradientPenaltyResult gradient_penalty(const CriticFn& critic, const Var& x_hat, float lambda) {
  Var scores = critic(x_hat);
  check_scores(scores, "interpolated");
  Var total = ops::sum_all(scores);
  Var g = grad(total, {x_hat}, /*create_graph=*/true)[0];
  if (!g->value.all_finite()) throw NumericError("non-finite gradient in gradient penalty");
  std::vector<int> axes;
  for (int i = 1; i < g->value.ndim(); ++i) axes.push_back(i);
  Var norm2 = ops::reduce_sum(ops::mul(g, g), axes, /*keepdims=*/false);  // (N)
  Var norm = ops::pow_scalar(norm2, 0.5f);
  Var diff = ops::add_scalar(norm, -1.0f);
  Var penalty = ops::mul_scalar(ops::mean_all(ops::mul(diff, diff)), lambda);
  GradientPenaltyResult res;
  res.penalty = penalty;
  res.grad_norm_mean = static_cast<double>(ops::mean_all(norm)->value.item());
  return res;
}

TotalDLossResult total_d_loss(const CriticFn& critic, const Var& real, const Var& fake,
                              const Var& x_hat, float lambda, bool use_drift,
                              float drift_epsilon) {
  check_shape(real->value.shape() == fake->value.shape(), "total_d_loss: real/fake shape mismatch");
  Var real_scores = critic(real);
  Var fake_scores = critic(fake);
  Var base = wgan_d_loss(real_scores, fake_scores);
  auto gp = gradient_penalty(critic, x_hat, lambda);
  Var loss = ops::add(base, gp.penalty);
  if (use_drift) {
    Var drift = ops::mul_scalar(ops::mean_all(ops::mul(real_scores, real_scores)), drift_epsilon);
    loss = ops::add(loss, drift);
  }
  TotalDLossResult res;
  res.loss = loss;
  res.report.d_loss = loss->value.item();
  res.report.g_loss = wgan_g_loss(fake_scores)->value.item();
  res.report.wasserstein_estimate =
      static_cast<double>(ops::mean_all(real_scores)->value.item()) -
      static_cast<double>(ops::mean_all(fake_scores)->value.item());
  res.report.gradient_penalty_term = gp.penalty->value.item();
  res.report.grad_norm_mean = gp.grad_norm_mean;
  return res;
}

}  // namespace topdown
