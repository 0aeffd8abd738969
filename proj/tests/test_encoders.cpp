#include "doctest.h"

#include <cmath>

#include "encoders/capsule_ops.hpp"
#include "encoders/encoders.hpp"

using namespace topdown;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, float scale = 1.0f) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal_f() * scale;
  return t;
}

double vec_norm(const std::vector<float>& v) {
  double n2 = 0;
  for (float x : v) n2 += double(x) * x;
  return std::sqrt(n2);
}

// Hand-rolled scalar routing for a (1, CH, PA, D, 1) prediction tensor.
// Mirrors the algorithm step by step in plain float loops.
std::vector<float> routing_reference_f32(const std::vector<float>& u_hat, int CH, int PA, int D,
                                         int iters) {
  std::vector<float> b(static_cast<size_t>(CH) * PA, 0.0f);
  std::vector<float> v(static_cast<size_t>(PA) * D, 0.0f);
  auto uh = [&](int ch, int pa, int d) {
    return u_hat[static_cast<size_t>((ch * PA + pa) * D + d)];
  };
  for (int r = 0; r < iters; ++r) {
    std::vector<float> c(static_cast<size_t>(CH) * PA);
    for (int ch = 0; ch < CH; ++ch) {
      float m = b[static_cast<size_t>(ch * PA)];
      for (int pa = 1; pa < PA; ++pa) m = std::max(m, b[static_cast<size_t>(ch * PA + pa)]);
      float z = 0.0f;
      std::vector<float> e(static_cast<size_t>(PA));
      for (int pa = 0; pa < PA; ++pa) {
        e[static_cast<size_t>(pa)] = std::exp(b[static_cast<size_t>(ch * PA + pa)] - m);
        z += e[static_cast<size_t>(pa)];
      }
      for (int pa = 0; pa < PA; ++pa) c[static_cast<size_t>(ch * PA + pa)] = e[static_cast<size_t>(pa)] / z;
    }
    for (int pa = 0; pa < PA; ++pa) {
      std::vector<float> s(static_cast<size_t>(D), 0.0f);
      for (int ch = 0; ch < CH; ++ch)
        for (int d = 0; d < D; ++d)
          s[static_cast<size_t>(d)] += c[static_cast<size_t>(ch * PA + pa)] * uh(ch, pa, d);
      float n2 = 0.0f;
      for (int d = 0; d < D; ++d) n2 += s[static_cast<size_t>(d)] * s[static_cast<size_t>(d)];
      float denom = (n2 + 1.0f) * std::pow(n2 + 1e-24f, 0.5f);
      float f = n2 / denom;
      for (int d = 0; d < D; ++d) v[static_cast<size_t>(pa * D + d)] = s[static_cast<size_t>(d)] * f;
    }
    if (r + 1 < iters) {
      for (int ch = 0; ch < CH; ++ch)
        for (int pa = 0; pa < PA; ++pa) {
          float agree = 0.0f;
          for (int d = 0; d < D; ++d) agree += uh(ch, pa, d) * v[static_cast<size_t>(pa * D + d)];
          b[static_cast<size_t>(ch * PA + pa)] += agree;
        }
    }
  }
  return v;
}

// Same algorithm in double precision with the plain mathematical squash.
std::vector<double> routing_reference_f64(const std::vector<float>& u_hat, int CH, int PA, int D,
                                          int iters) {
  std::vector<double> b(static_cast<size_t>(CH) * PA, 0.0);
  std::vector<double> v(static_cast<size_t>(PA) * D, 0.0);
  auto uh = [&](int ch, int pa, int d) {
    return double(u_hat[static_cast<size_t>((ch * PA + pa) * D + d)]);
  };
  for (int r = 0; r < iters; ++r) {
    std::vector<double> c(static_cast<size_t>(CH) * PA);
    for (int ch = 0; ch < CH; ++ch) {
      double z = 0;
      for (int pa = 0; pa < PA; ++pa) z += std::exp(b[static_cast<size_t>(ch * PA + pa)]);
      for (int pa = 0; pa < PA; ++pa)
        c[static_cast<size_t>(ch * PA + pa)] = std::exp(b[static_cast<size_t>(ch * PA + pa)]) / z;
    }
    for (int pa = 0; pa < PA; ++pa) {
      std::vector<double> s(static_cast<size_t>(D), 0.0);
      for (int ch = 0; ch < CH; ++ch)
        for (int d = 0; d < D; ++d) s[static_cast<size_t>(d)] += c[static_cast<size_t>(ch * PA + pa)] * uh(ch, pa, d);
      double n2 = 0;
      for (int d = 0; d < D; ++d) n2 += s[static_cast<size_t>(d)] * s[static_cast<size_t>(d)];
      double n = std::sqrt(n2);
      double f = n < 1e-12 ? 0.0 : (n2 / (1.0 + n2)) / n;
      for (int d = 0; d < D; ++d) v[static_cast<size_t>(pa * D + d)] = s[static_cast<size_t>(d)] * f;
    }
    if (r + 1 < iters) {
      for (int ch = 0; ch < CH; ++ch)
        for (int pa = 0; pa < PA; ++pa) {
          double agree = 0;
          for (int d = 0; d < D; ++d) agree += uh(ch, pa, d) * v[static_cast<size_t>(pa * D + d)];
          b[static_cast<size_t>(ch * PA + pa)] += agree;
        }
    }
  }
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("encoders");

TEST_CASE("squash bounds, direction and analytic norms") {
  SUBCASE("zero maps to zero") {
    auto v = squash_vector({0.0f, 0.0f, 0.0f});
    for (float x : v) CHECK(x == 0.0f);
  }
  SUBCASE("unit vector squashes to norm 1/2") {
    auto v = squash_vector({1.0f, 0.0f, 0.0f, 0.0f});
    CHECK(vec_norm(v) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("norm 100 squashes to 10000/10001") {
    auto v = squash_vector({100.0f, 0.0f});
    CHECK(vec_norm(v) == doctest::Approx(10000.0 / 10001.0).epsilon(1e-9));
  }
  SUBCASE("norm stays below 1 and grows with input norm") {
    Rng rng = Rng::seeded(3, 3);
    double prev = -1.0;
    for (double scale : {0.01, 0.1, 1.0, 5.0, 50.0}) {
      std::vector<float> s(8);
      for (auto& x : s) x = rng.normal_f();
      double n = vec_norm(s);
      for (auto& x : s) x = static_cast<float>(x * scale / n);  // exact norm `scale`
      auto v = squash_vector(s);
      double out = vec_norm(v);
      CHECK(out < 1.0);
      CHECK(out > prev);
      prev = out;
    }
  }
}

TEST_CASE("graph squash agrees with the scalar squash") {
  Rng rng = Rng::seeded(4, 4);
  Tensor t({5, 6});
  std::vector<std::vector<float>> rows(5, std::vector<float>(6));
  for (int64_t r = 0; r < 5; ++r)
    for (int64_t c = 0; c < 6; ++c) {
      float v = rng.normal_f() * (r + 1);
      t.at(r * 6 + c) = v;
      rows[static_cast<size_t>(r)][static_cast<size_t>(c)] = v;
    }
  Var out = ops::squash(make_const(t), 1);
  for (int64_t r = 0; r < 5; ++r) {
    auto expect = squash_vector(rows[static_cast<size_t>(r)]);
    for (int64_t c = 0; c < 6; ++c)
      CHECK(out->value.at(r * 6 + c) == doctest::Approx(expect[static_cast<size_t>(c)]).epsilon(1e-6));
  }
}

TEST_CASE("routing couplings start uniform and stay distributions") {
  Rng rng = Rng::seeded(5, 5);
  Tensor u = random_tensor({2, 6, 4, 8, 3}, rng);
  std::vector<Tensor> couplings;
  dynamic_routing(make_const(u), 3, &couplings);
  REQUIRE(couplings.size() == 3);
  // iteration 1: uniform 1/parents
  for (int64_t i = 0; i < couplings[0].size(); ++i)
    CHECK(couplings[0].at(i) == doctest::Approx(0.25).epsilon(1e-7));
  for (const Tensor& c : couplings) {
    REQUIRE(c.shape() == Shape{2, 6, 4});
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t ch = 0; ch < 6; ++ch) {
        double sum = 0;
        for (int64_t pa = 0; pa < 4; ++pa) sum += c.at((n * 6 + ch) * 4 + pa);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      }
  }
}

TEST_CASE("single parent degenerates to squash of the prediction sum") {
  Rng rng = Rng::seeded(6, 6);
  Tensor u = random_tensor({1, 5, 1, 4, 1}, rng);
  Var v = dynamic_routing(make_const(u), 3);
  // c = 1 always, so s = sum over children regardless of iterations
  Tensor s({4});
  for (int64_t d = 0; d < 4; ++d) {
    float acc = 0;
    for (int64_t ch = 0; ch < 5; ++ch) acc += u.at((ch * 1 + 0) * 4 + d);
    s.at(d) = acc;
  }
  Var expect = ops::squash(make_const(s.reshaped({1, 4})), 1);
  for (int64_t d = 0; d < 4; ++d)
    CHECK(v->value.at(d) == doctest::Approx(expect->value.at(d)).epsilon(1e-6));
}

TEST_CASE("2x2x3-iteration routing matches the hand-rolled scalar reference") {
  const int CH = 2, PA = 2, D = 3;
  std::vector<float> u_hat = {
      0.5f,  -0.25f, 1.0f,   // child 0 -> parent 0
      0.75f, 0.125f, -0.5f,  // child 0 -> parent 1
      -1.0f, 0.25f,  0.5f,   // child 1 -> parent 0
      0.25f, 0.5f,   0.75f,  // child 1 -> parent 1
  };
  Tensor u({1, CH, PA, D, 1});
  for (size_t i = 0; i < u_hat.size(); ++i) u.at(static_cast<int64_t>(i)) = u_hat[i];

  Var v = dynamic_routing(make_const(u), 3);
  auto ref32 = routing_reference_f32(u_hat, CH, PA, D, 3);
  auto ref64 = routing_reference_f64(u_hat, CH, PA, D, 3);
  REQUIRE(v->value.size() == PA * D);
  for (int64_t i = 0; i < PA * D; ++i) {
    CHECK(std::abs(v->value.at(i) - ref32[static_cast<size_t>(i)]) < 1e-9);
    CHECK(v->value.at(i) == doctest::Approx(ref64[static_cast<size_t>(i)]).epsilon(1e-5));
  }
  CHECK_THROWS_AS(dynamic_routing(make_const(Tensor({1, 2, 0, 3, 1})), 3), ConfigError);
}

TEST_CASE("all four encoders emit 4096 finite features") {
  Rng rng = Rng::seeded(7, 7);
  Tensor stacked = random_tensor({1, 63, 64, 64}, rng, 0.3f);
  Tensor volume = random_tensor({1, 3, 21, 64, 64}, rng, 0.3f);
  for (auto kind : {EncoderKind::kBaseline, EncoderKind::kCapsule, EncoderKind::kConv3d,
                    EncoderKind::kConv2d1d}) {
    auto enc = make_encoder(kind, 123);
    Var out = enc->forward(make_const(enc->wants_volume() ? volume : stacked));
    REQUIRE(out->value.shape() == Shape{1, kStateFeatureDim});
    CHECK(out->value.all_finite());
  }
}

TEST_CASE("encoders reject wrong input shapes") {
  auto base = make_encoder(EncoderKind::kBaseline, 1);
  CHECK_THROWS_AS(base->forward(make_const(Tensor({1, 62, 64, 64}))), ShapeError);
  auto c3d = make_encoder(EncoderKind::kConv3d, 1);
  // depth 22 is a shape error, never silent truncation
  CHECK_THROWS_AS(c3d->forward(make_const(Tensor({1, 3, 22, 64, 64}))), ShapeError);
}

TEST_CASE("baseline responds to single-channel input changes") {
  Rng rng = Rng::seeded(8, 8);
  auto enc = make_encoder(EncoderKind::kBaseline, 99);
  Tensor a = random_tensor({1, 63, 64, 64}, rng, 0.3f);
  Tensor b = a.clone();
  const int64_t hw = 64 * 64;
  for (int64_t i = 0; i < hw; ++i) b.at(17 * hw + i) += 0.25f;
  Var ya = enc->forward(make_const(a));
  Var yb = enc->forward(make_const(b));
  double diff = 0;
  for (int64_t i = 0; i < ya->value.size(); ++i)
    diff = std::max(diff, std::abs(double(ya->value.at(i)) - yb->value.at(i)));
  CHECK(diff > 1e-6);
}

TEST_CASE("conv3d encoder is sensitive to frame order") {
  Rng rng = Rng::seeded(9, 9);
  auto enc = make_encoder(EncoderKind::kConv3d, 77);
  Tensor a = random_tensor({1, 3, 21, 64, 64}, rng, 0.3f);
  Tensor b = a.clone();
  const int64_t hw = 64 * 64;
  for (int64_t c = 0; c < 3; ++c) {
    float* pa = b.data() + (c * 21 + 3) * hw;
    float* pb = b.data() + (c * 21 + 15) * hw;
    for (int64_t i = 0; i < hw; ++i) std::swap(pa[i], pb[i]);
  }
  Var ya = enc->forward(make_const(a));
  Var yb = enc->forward(make_const(b));
  double diff = 0;
  for (int64_t i = 0; i < ya->value.size(); ++i)
    diff = std::max(diff, std::abs(double(ya->value.at(i)) - yb->value.at(i)));
  CHECK(diff > 1e-6);
}

TEST_CASE("conv2d1d per-frame features share weights across frames") {
  auto enc = make_encoder(EncoderKind::kConv2d1d, 31);
  Rng rng = Rng::seeded(11, 11);
  // one frame repeated 21 times
  Tensor vol({1, 3, 21, 64, 64});
  const int64_t hw = 64 * 64;
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t i = 0; i < hw; ++i) {
      float v = rng.next_float();
      for (int64_t j = 0; j < 21; ++j) vol.at((c * 21 + j) * hw + i) = v;
    }
  }
  Var feats = enc->frame_features(make_const(vol));
  REQUIRE(feats->value.shape() == Shape{1, 21, kStateFeatureDim});
  for (int64_t j = 1; j < 21; ++j)
    for (int64_t k = 0; k < kStateFeatureDim; k += 97)
      CHECK(feats->value.at(j * kStateFeatureDim + k) == feats->value.at(k));
  Var out = enc->forward(make_const(vol));
  CHECK(out->value.shape() == Shape{1, kStateFeatureDim});
}

TEST_CASE("capsule encoder output capsules have norm below 1") {
  Rng rng = Rng::seeded(10, 10);
  auto enc = make_encoder(EncoderKind::kCapsule, 55);
  Tensor x = random_tensor({1, 63, 64, 64}, rng, 0.3f);
  Var out = enc->forward(make_const(x));
  // Output layout is (1, 16 dims, 16, 16) flattened; 16*16*16 = 4096.
  const int64_t positions = 16 * 16;
  for (int64_t p = 0; p < positions; ++p) {
    double n2 = 0;
    for (int64_t d = 0; d < 16; ++d) n2 += std::pow(double(out->value.at(d * positions + p)), 2.0);
    CHECK(std::sqrt(n2) < 1.0);
  }
}

TEST_SUITE_END();
