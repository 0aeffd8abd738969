#pragma once

#include <functional>
#include <vector>

#include "core/ops.hpp"

namespace topdown {

struct LossReport {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double wasserstein_estimate = 0.0;  // E[D(real)] - E[D(fake)]
  double gradient_penalty_term = 0.0;
  double grad_norm_mean = 0.0;

  bool all_finite() const;
};

// Critic closure with the condition and scale state already bound.
using CriticFn = std::function<Var(const Var& images)>;

// Both networks minimize: the critic minimizes E[fake] - E[real] (+ GP), the
// generator minimizes -E[fake].
Var wgan_d_loss(const Var& real_scores, const Var& fake_scores);
Var wgan_g_loss(const Var& fake_scores);

// x_hat = eps * real + (1 - eps) * fake, one epsilon per sample pair.
// Returned as a gradient-tracked leaf (the penalty differentiates w.r.t. it);
// no gradient flows back into real/fake.
Var interpolate_pairs(const Var& real, const Var& fake, const std::vector<float>& eps);

struct GradientPenaltyResult {
  Var penalty;            // lambda * E[(||grad_xhat D||_2 - 1)^2], graph-tracked
  double grad_norm_mean;  // E[||grad_xhat D||]
};
// The penalty stays differentiable with respect to the critic's parameters
// (the inner gradient is built with create_graph).
GradientPenaltyResult gradient_penalty(const CriticFn& critic, const Var& x_hat, float lambda);

struct TotalDLossResult {
  Var loss;
  LossReport report;
};
TotalDLossResult total_d_loss(const CriticFn& critic, const Var& real, const Var& fake,
                              const Var& x_hat, float lambda, bool use_drift = false,
                              float drift_epsilon = 1e-3f);

}  // namespace topdown
