#include "doctest.h"

#include <cmath>

#include "core/ops.hpp"
#include "core/rng.hpp"

using namespace topdown;
using namespace topdown::ops;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, float scale = 1.0f) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal_f() * scale;
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (int64_t i = 0; i < a.size(); ++i) s += double(a.at(i)) * double(b.at(i));
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("autograd");

TEST_CASE("rng streams are deterministic and serializable") {
  Rng a = seed_stream(42, "test");
  Rng b = seed_stream(42, "test");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(seed_stream(42, "test").next_u64() != seed_stream(43, "test").next_u64());
  CHECK(seed_stream(42, "test").next_u64() != seed_stream(42, "other").next_u64());

  Rng c = seed_stream(7, "x");
  c.normal();
  Rng d = rng_from_string(rng_to_string(c));
  for (int i = 0; i < 50; ++i) CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("conv2d matches a naive double-loop oracle") {
  Rng rng = Rng::seeded(7, 1);
  int64_t N = 2, C = 3, H = 6, W = 5, O = 4, kh = 3, kw = 2;
  Conv2dSpec sp{2, 1, 1, 0};
  Tensor x = random_tensor({N, C, H, W}, rng);
  Tensor w = random_tensor({O, C, kh, kw}, rng);
  Var y = conv2d(make_const(x), make_const(w), sp);
  int64_t OH = (H + 2 * sp.pad_h - kh) / sp.stride_h + 1;
  int64_t OW = (W + 2 * sp.pad_w - kw) / sp.stride_w + 1;
  REQUIRE(y->value.shape() == Shape{N, O, OH, OW});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t o = 0; o < O; ++o)
      for (int64_t oh = 0; oh < OH; ++oh)
        for (int64_t ow = 0; ow < OW; ++ow) {
          double acc = 0;
          for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < kh; ++i)
              for (int64_t j = 0; j < kw; ++j) {
                int64_t ih = oh * sp.stride_h - sp.pad_h + i;
                int64_t iw = ow * sp.stride_w - sp.pad_w + j;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += double(x.at(((n * C + c) * H + ih) * W + iw)) *
                       double(w.at(((o * C + c) * kh + i) * kw + j));
              }
          CHECK(y->value.at(((n * O + o) * OH + oh) * OW + ow) ==
                doctest::Approx(acc).epsilon(1e-4));
        }
}

TEST_CASE("conv3d matches a naive oracle with asymmetric padding") {
  Rng rng = Rng::seeded(9, 1);
  int64_t C = 2, D = 5, H = 6, W = 6, O = 3, kd = 3, kh = 4, kw = 4;
  Conv3dSpec sp;
  sp.stride_h = sp.stride_w = 1;
  sp.pad_h_lo = sp.pad_w_lo = 1;
  sp.pad_h_hi = sp.pad_w_hi = 2;
  Tensor x = random_tensor({1, C, D, H, W}, rng);
  Tensor w = random_tensor({O, C, kd, kh, kw}, rng);
  Var y = conv3d(make_const(x), make_const(w), sp);
  int64_t OD = D - kd + 1, OH = H, OW = W;
  REQUIRE(y->value.shape() == Shape{1, O, OD, OH, OW});
  double worst = 0;
  for (int64_t o = 0; o < O; ++o)
    for (int64_t od = 0; od < OD; ++od)
      for (int64_t oh = 0; oh < OH; ++oh)
        for (int64_t ow = 0; ow < OW; ++ow) {
          double acc = 0;
          for (int64_t c = 0; c < C; ++c)
            for (int64_t z = 0; z < kd; ++z)
              for (int64_t i = 0; i < kh; ++i)
                for (int64_t j = 0; j < kw; ++j) {
                  int64_t id = od + z, ih = oh - 1 + i, iw = ow - 1 + j;
                  if (id < 0 || id >= D || ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                  acc += double(x.at(((c * D + id) * H + ih) * W + iw)) *
                         double(w.at((((o * C + c) * kd + z) * kh + i) * kw + j));
                }
          worst = std::max(worst,
                           std::abs(acc - y->value.at(((o * OD + od) * OH + oh) * OW + ow)));
        }
  CHECK(worst < 1e-4);
}

TEST_CASE("matmul matches naive") {
  Rng rng = Rng::seeded(3, 0);
  Tensor a = random_tensor({4, 7}, rng);
  Tensor b = random_tensor({7, 5}, rng);
  Var y = matmul(make_const(a), make_const(b));
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 5; ++j) {
      double acc = 0;
      for (int64_t k = 0; k < 7; ++k) acc += double(a.at(i * 7 + k)) * double(b.at(k * 5 + j));
      CHECK(y->value.at(i * 5 + j) == doctest::Approx(acc).epsilon(1e-5));
    }
}

TEST_CASE("reduce_sum and broadcast_to are adjoint") {
  Rng rng = Rng::seeded(11, 2);
  Tensor x = random_tensor({3, 4, 5}, rng);
  Tensor y = random_tensor({3, 1, 5}, rng);
  Var rs = reduce_sum(make_const(x), {1}, true);
  Var bc = broadcast_to(make_const(y), {3, 4, 5});
  CHECK(dot(rs->value, y) == doctest::Approx(dot(x, bc->value)).epsilon(1e-5));
}

TEST_CASE("upsample and 4*downsample are adjoint") {
  Rng rng = Rng::seeded(12, 2);
  Tensor x = random_tensor({2, 3, 4, 4}, rng);
  Tensor y = random_tensor({2, 3, 8, 8}, rng);
  Var up = upsample_nearest2x(make_const(x));
  Var down = mul_scalar(downsample_avg2x(make_const(y)), 4.0f);
  CHECK(dot(up->value, y) == doctest::Approx(dot(x, down->value)).epsilon(1e-5));
}

TEST_CASE("slice/concat/permute round-trips") {
  Rng rng = Rng::seeded(13, 2);
  Tensor x = random_tensor({2, 5, 3}, rng);
  Var v = make_const(x);
  Var back = concat({slice(v, 1, 0, 2), slice(v, 1, 2, 3)}, 1);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(back->value.at(i) == x.at(i));

  Var p = permute(v, {2, 0, 1});
  Var pp = permute(p, {1, 2, 0});
  for (int64_t i = 0; i < x.size(); ++i) CHECK(pp->value.at(i) == x.at(i));
  CHECK(p->value.shape() == Shape{3, 2, 5});
}

TEST_CASE("first-order gradients match finite differences on a smooth composite") {
  Rng rng = Rng::seeded(21, 3);
  Tensor xt = random_tensor({2, 3, 6, 6}, rng, 0.5f);
  Tensor wt = random_tensor({4, 3, 3, 3}, rng, 0.3f);
  Var w = make_param(wt, "w");
  Conv2dSpec sp{2, 2, 1, 1};
  auto loss_fn = [&](const Tensor& x_in) {
    Var x = make_const(x_in);
    Var y = conv2d(x, w, sp);
    Var z = pixelwise_norm(mul(y, y), 1e-8f);
    return mean_all(mul(z, add_scalar(z, 0.5f)));
  };
  Var loss = loss_fn(xt);
  backward(loss);
  Tensor g = w->grad_acc.clone();
  double worst = 0;
  for (int64_t i = 0; i < wt.size(); i += 11) {
    float orig = wt.at(i);
    float h = 2e-3f;
    wt.at(i) = orig + h;
    double lp = loss_fn(xt)->value.item();
    wt.at(i) = orig - h;
    double lm = loss_fn(xt)->value.item();
    wt.at(i) = orig;
    double fd = (lp - lm) / (2.0 * h);
    double err = std::abs(fd - g.at(i)) / std::max({1.0, std::abs(fd), double(std::abs(g.at(i)))});
    worst = std::max(worst, err);
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("gradient of a gradient (double backward) matches finite differences") {
  Rng rng = Rng::seeded(31, 4);
  Tensor xt = random_tensor({4, 8}, rng);
  Tensor w1t = random_tensor({8, 16}, rng, 0.3f);
  Tensor w2t = random_tensor({16, 1}, rng, 0.3f);
  Var w1 = make_param(w1t, "w1");
  Var w2 = make_param(w2t, "w2");
  auto penalty = [&]() {
    Var x = make_param(xt.clone(), "x");
    Var scores = matmul(leaky_relu(matmul(x, w1), 0.2f), w2);
    Var g = grad(sum_all(scores), {x}, /*create_graph=*/true)[0];
    Var n = pow_scalar(reduce_sum(mul(g, g), {1}, false), 0.5f);
    Var d = add_scalar(n, -1.0f);
    return mean_all(mul(d, d));
  };
  Var pen = penalty();
  backward(pen);
  Tensor gw = w1->grad_acc.clone();
  double worst = 0;
  for (int64_t i = 0; i < w1t.size(); i += 7) {
    float orig = w1t.at(i);
    float h = 1e-3f;
    w1t.at(i) = orig + h;
    double lp = penalty()->value.item();
    w1t.at(i) = orig - h;
    double lm = penalty()->value.item();
    w1t.at(i) = orig;
    double fd = (lp - lm) / (2.0 * h);
    double err = std::abs(fd - gw.at(i)) / std::max({1.0, std::abs(fd), double(std::abs(gw.at(i)))});
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("softmax rows are distributions and shift invariant") {
  Rng rng = Rng::seeded(41, 5);
  Tensor x = random_tensor({3, 6}, rng, 2.0f);
  Var s = softmax(make_const(x), 1);
  for (int64_t r = 0; r < 3; ++r) {
    double sum = 0;
    for (int64_t c = 0; c < 6; ++c) {
      CHECK(s->value.at(r * 6 + c) >= 0.0f);
      sum += s->value.at(r * 6 + c);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
  Tensor shifted = x.clone();
  for (int64_t i = 0; i < shifted.size(); ++i) shifted.at(i) += 3.25f;
  Var s2 = softmax(make_const(shifted), 1);
  for (int64_t i = 0; i < x.size(); ++i)
    CHECK(s->value.at(i) == doctest::Approx(s2->value.at(i)).epsilon(1e-5));
}

TEST_CASE("backward accumulates over shared subexpressions") {
  Tensor xt = Tensor::full({3}, 2.0f);
  Var x = make_param(xt, "x");
  Var y = mul(x, x);
  Var z = add(y, y);  // 2 x^2
  backward(sum_all(z));
  for (int64_t i = 0; i < 3; ++i) CHECK(x->grad_acc.at(i) == doctest::Approx(8.0f));
}

TEST_SUITE_END();
