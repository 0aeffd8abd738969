#include "doctest.h"

#include <cmath>

#include "losses/wgan.hpp"
#include "nn/layers.hpp"

using namespace topdown;

namespace {

Var scores_of(std::vector<float> v) {
  return make_const(Tensor::from_data({static_cast<int64_t>(v.size())}, std::move(v)));
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("wgan_d_loss is E[fake] - E[real]") {
  CHECK(wgan_d_loss(scores_of({1.0f}), scores_of({0.0f}))->value.item() == doctest::Approx(-1.0));
  CHECK(wgan_d_loss(scores_of({0.3f, 0.7f}), scores_of({0.3f, 0.7f}))->value.item() ==
        doctest::Approx(0.0));
  CHECK(wgan_d_loss(scores_of({2.0f, 0.0f}), scores_of({1.0f, 1.0f}))->value.item() ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(wgan_d_loss(scores_of({}), scores_of({1.0f})), ConfigError);
}

TEST_CASE("wgan_g_loss is -E[fake]") {
  CHECK(wgan_g_loss(scores_of({0.5f}))->value.item() == doctest::Approx(-0.5));
  CHECK(wgan_g_loss(scores_of({0.0f}))->value.item() == doctest::Approx(0.0));
  CHECK(wgan_g_loss(scores_of({1.0f, -1.0f}))->value.item() == doctest::Approx(0.0));
  CHECK_THROWS_AS(wgan_g_loss(scores_of({})), ConfigError);
}

TEST_CASE("interpolation endpoints and convexity") {
  Rng rng = Rng::seeded(1, 1);
  Tensor real({3, 2, 2, 2});
  Tensor fake({3, 2, 2, 2});
  for (int64_t i = 0; i < real.size(); ++i) {
    real.at(i) = rng.next_float();
    fake.at(i) = rng.next_float();
  }
  Var r = make_const(real), f = make_const(fake);

  Var at1 = interpolate_pairs(r, f, {1.0f, 1.0f, 1.0f});
  for (int64_t i = 0; i < real.size(); ++i) CHECK(at1->value.at(i) == real.at(i));
  Var at0 = interpolate_pairs(r, f, {0.0f, 0.0f, 0.0f});
  for (int64_t i = 0; i < real.size(); ++i) CHECK(at0->value.at(i) == fake.at(i));

  Var zr = make_const(Tensor::zeros({1, 1, 2, 2}));
  Var of = make_const(Tensor::full({1, 1, 2, 2}, 1.0f));
  Var mid = interpolate_pairs(zr, of, {0.5f});
  for (int64_t i = 0; i < 4; ++i) CHECK(mid->value.at(i) == 0.5f);

  std::vector<float> eps = {0.13f, 0.77f, 0.42f};
  Var x = interpolate_pairs(r, f, eps);
  CHECK(x->requires_grad);
  for (int64_t i = 0; i < real.size(); ++i) {
    float lo = std::min(real.at(i), fake.at(i));
    float hi = std::max(real.at(i), fake.at(i));
    CHECK(x->value.at(i) >= lo);
    CHECK(x->value.at(i) <= hi);
  }
  CHECK_THROWS_AS(interpolate_pairs(r, f, {0.5f}), ShapeError);
}

TEST_CASE("constant critic yields penalty exactly lambda") {
  Tensor bias = Tensor::full({1}, 0.37f);
  Var b = make_param(bias, "b");
  CriticFn critic = [&](const Var& images) {
    Var broad = ops::broadcast_to(ops::reshape(b, {1, 1, 1, 1}),
                                  {images->value.dim(0), 1, 1, 1});
    return ops::reshape(broad, {images->value.dim(0)});
  };
  Var x_hat = make_param(Tensor::full({4, 2, 3, 3}, 0.5f), "x_hat");
  auto gp = gradient_penalty(critic, x_hat, 10.0f);
  CHECK(gp.penalty->value.item() == 10.0f);  // exact
  CHECK(gp.grad_norm_mean == 0.0);
}

TEST_CASE("unit-gradient linear critic yields near-zero penalty") {
  const int64_t dim = 8;
  CriticFn critic = [&](const Var& images) {
    Var flat = ops::reshape(images, {images->value.dim(0), dim});
    Var scaled = ops::mul_scalar(flat, 1.0f / std::sqrt(static_cast<float>(dim)));
    return ops::reduce_sum(scaled, {1}, false);
  };
  Var x_hat = make_param(Tensor::full({5, dim}, 0.25f), "x_hat");
  auto gp = gradient_penalty(critic, x_hat, 10.0f);
  CHECK(gp.penalty->value.item() < 1e-10);
  CHECK(gp.grad_norm_mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("penalty gradient norms match a double-precision finite-difference oracle") {
  Rng rng = Rng::seeded(2, 2);
  const int64_t dim = 8, hidden = 16, batch = 4;
  Tensor w1({dim, hidden}), w2({hidden, 1});
  for (int64_t i = 0; i < w1.size(); ++i) w1.at(i) = rng.normal_f() * 0.5f;
  for (int64_t i = 0; i < w2.size(); ++i) w2.at(i) = rng.normal_f() * 0.5f;
  Var vw1 = make_param(w1, "w1"), vw2 = make_param(w2, "w2");
  CriticFn critic = [&](const Var& images) {
    Var h = ops::leaky_relu(ops::matmul(images, vw1), 0.2f);
    return ops::reshape(ops::matmul(h, vw2), {images->value.dim(0)});
  };
  Tensor x({batch, dim});
  for (int64_t i = 0; i < x.size(); ++i) x.at(i) = rng.normal_f();
  Var x_hat = make_param(x.clone(), "x_hat");

  Var scores = critic(x_hat);
  Var g = grad(ops::sum_all(scores), {x_hat}, false)[0];

  // Double-precision forward of the same critic for the FD oracle.
  auto critic_f64 = [&](const std::vector<double>& row) {
    double out = 0;
    for (int64_t h = 0; h < hidden; ++h) {
      double acc = 0;
      for (int64_t d = 0; d < dim; ++d) acc += row[static_cast<size_t>(d)] * double(w1.at(d * hidden + h));
      if (acc < 0) acc *= 0.2;
      out += acc * double(w2.at(h));
    }
    return out;
  };
  for (int64_t n = 0; n < batch; ++n) {
    double n2_auto = 0, n2_fd = 0;
    for (int64_t d = 0; d < dim; ++d) {
      std::vector<double> row(static_cast<size_t>(dim));
      for (int64_t k = 0; k < dim; ++k) row[static_cast<size_t>(k)] = x.at(n * dim + k);
      double h = 1e-5;
      row[static_cast<size_t>(d)] += h;
      double lp = critic_f64(row);
      row[static_cast<size_t>(d)] -= 2 * h;
      double lm = critic_f64(row);
      double fd = (lp - lm) / (2 * h);
      n2_fd += fd * fd;
      double ad = g->value.at(n * dim + d);
      n2_auto += ad * ad;
    }
    CHECK(std::sqrt(n2_auto) == doctest::Approx(std::sqrt(n2_fd)).epsilon(1e-4));
  }
}

TEST_CASE("total_d_loss composes additively and reduces to plain WGAN at lambda 0") {
  Rng rng = Rng::seeded(3, 3);
  const int64_t dim = 6;
  Tensor w({dim, 1});
  for (int64_t i = 0; i < w.size(); ++i) w.at(i) = rng.normal_f() * 0.4f;
  Var vw = make_param(w, "w");
  CriticFn critic = [&](const Var& images) {
    Var flat = ops::reshape(images, {images->value.dim(0), dim});
    return ops::reshape(ops::matmul(flat, vw), {images->value.dim(0)});
  };
  Tensor real({3, dim}), fake({3, dim});
  for (int64_t i = 0; i < real.size(); ++i) {
    real.at(i) = rng.next_float();
    fake.at(i) = rng.next_float();
  }
  Var vr = make_const(real), vf = make_const(fake);
  Var x_hat = interpolate_pairs(vr, vf, {0.2f, 0.5f, 0.9f});

  auto at0 = total_d_loss(critic, vr, vf, x_hat, 0.0f);
  Var plain = wgan_d_loss(critic(vr), critic(vf));
  CHECK(at0.loss->value.item() == doctest::Approx(plain->value.item()).epsilon(1e-7));
  CHECK(at0.report.gradient_penalty_term == doctest::Approx(0.0));

  float lambda = 10.0f;
  auto total = total_d_loss(critic, vr, vf, x_hat, lambda);
  auto gp = gradient_penalty(critic, x_hat, lambda);
  CHECK(total.loss->value.item() ==
        doctest::Approx(plain->value.item() + gp.penalty->value.item()).epsilon(1e-6));
  CHECK(total.report.gradient_penalty_term >= 0.0);
  CHECK(total.report.wasserstein_estimate ==
        doctest::Approx(-plain->value.item()).epsilon(1e-6));
  CHECK(total.report.all_finite());

  // Drift term adds eps * E[D(real)^2].
  auto with_drift = total_d_loss(critic, vr, vf, x_hat, lambda, true, 0.5f);
  Var real_scores = critic(vr);
  double drift = 0.5 * ops::mean_all(ops::mul(real_scores, real_scores))->value.item();
  CHECK(with_drift.loss->value.item() ==
        doctest::Approx(total.loss->value.item() + drift).epsilon(1e-5));
}

TEST_SUITE_END();
