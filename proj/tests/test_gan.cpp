#include "doctest.h"

#include <cmath>

#include "gan/discriminator.hpp"
#include "gan/generator.hpp"

using namespace topdown;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, float scale = 1.0f) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal_f() * scale;
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("gan");

TEST_CASE("generator output shape follows the scale") {
  Rng rng = Rng::seeded(1, 1);
  Generator gen(5);
  Tensor feats = random_tensor({2, 4096}, rng, 0.5f);
  for (int scale : {4, 8, 16, 32, 64}) {
    while (gen.built_scale() < scale) gen.grow(gen.built_scale() * 2);
    Var out = gen.generate(make_const(feats), ScaleState{scale, 1.0});
    CHECK(out->value.shape() == Shape{2, 3, scale, scale});
    CHECK(out->value.all_finite());
  }
}

TEST_CASE("alpha 0 reproduces the upsampled pre-growth output bit for bit") {
  Rng rng = Rng::seeded(2, 2);
  Generator gen(7);
  Tensor feats = random_tensor({2, 4096}, rng, 0.5f);
  Var before = gen.generate(make_const(feats), ScaleState{4, 1.0});
  Var up = ops::upsample_nearest2x(before);
  gen.grow(8);
  Var after = gen.generate(make_const(feats), ScaleState{8, 0.0});
  REQUIRE(after->value.shape() == up->value.shape());
  for (int64_t i = 0; i < up->value.size(); ++i) CHECK(after->value.at(i) == up->value.at(i));
}

TEST_CASE("fade blend is linear in alpha") {
  Rng rng = Rng::seeded(3, 3);
  Generator gen(9);
  gen.grow(8);
  Tensor feats = random_tensor({1, 4096}, rng, 0.5f);
  Var at0 = gen.generate(make_const(feats), ScaleState{8, 0.0});
  Var at1 = gen.generate(make_const(feats), ScaleState{8, 1.0});
  float a = 0.3f;
  Var blended = gen.generate(make_const(feats), ScaleState{8, a});
  for (int64_t i = 0; i < blended->value.size(); ++i) {
    float expect = a * at1->value.at(i) + (1.0f - a) * at0->value.at(i);
    CHECK(blended->value.at(i) == expect);
  }
}

TEST_CASE("grow validates and adds parameters monotonically") {
  Generator gen(11);
  int64_t before = gen.store().total_size();
  CHECK_THROWS_AS(gen.grow(16), ConfigError);  // skipping 8
  gen.grow(8);
  int64_t after8 = gen.store().total_size();
  CHECK(after8 > before);
  gen.grow(16);
  gen.grow(32);
  gen.grow(64);
  CHECK(gen.store().total_size() > after8);
  CHECK_THROWS_AS(gen.grow(128), ConfigError);

  Discriminator disc(11);
  int64_t dbefore = disc.store().total_size();
  CHECK_THROWS_AS(disc.grow(32), ConfigError);
  disc.grow(8);
  CHECK(disc.store().total_size() > dbefore);
}

TEST_CASE("growing preserves existing parameters exactly") {
  Generator gen(13);
  Var w = gen.store().find("gen.block4.conv0.w");
  REQUIRE(w);
  Tensor copy = w->value.clone();
  gen.grow(8);
  gen.grow(16);
  Var w2 = gen.store().find("gen.block4.conv0.w");
  CHECK(w.get() == w2.get());
  for (int64_t i = 0; i < copy.size(); ++i) CHECK(w->value.at(i) == copy.at(i));
}

TEST_CASE("invalid scale states are rejected") {
  Generator gen(15);
  Tensor feats({1, 4096});
  CHECK_THROWS_AS(gen.generate(make_const(feats), ScaleState{4, 0.5}), ConfigError);
  CHECK_THROWS_AS(gen.generate(make_const(feats), ScaleState{8, 1.0}), ConfigError);  // not grown
  CHECK_THROWS_AS(gen.generate(make_const(feats), ScaleState{5, 1.0}), ConfigError);
  CHECK_THROWS_AS(gen.generate(make_const(feats), ScaleState{8, 1.5}), ConfigError);
}

TEST_CASE("discriminator concatenates a 66-channel input at every scale") {
  Rng rng = Rng::seeded(4, 4);
  Discriminator disc(17);
  CHECK(disc.input_channels() == 66);
  Tensor cond = random_tensor({2, 63, 64, 64}, rng, 0.3f);
  for (int scale : {4, 8, 16, 32, 64}) {
    while (disc.built_scale() < scale) disc.grow(disc.built_scale() * 2);
    Var from_rgb_w = disc.store().find("disc.fromrgb" + std::to_string(scale) + ".w");
    REQUIRE(from_rgb_w);
    CHECK(from_rgb_w->value.dim(1) == 66);
    Tensor img = random_tensor({2, 3, scale, scale}, rng, 0.3f);
    Var score = disc.discriminate(make_const(img), make_const(cond), ScaleState{scale, 1.0});
    CHECK(score->value.shape() == Shape{2});
    CHECK(score->value.all_finite());
  }
}

TEST_CASE("discriminator alpha 0 equals the previous scale on downsampled input") {
  Rng rng = Rng::seeded(5, 5);
  Discriminator disc(19);
  disc.grow(8);
  Tensor img = random_tensor({2, 3, 8, 8}, rng, 0.3f);
  Tensor cond = random_tensor({2, 63, 64, 64}, rng, 0.3f);
  Var blended = disc.discriminate(make_const(img), make_const(cond), ScaleState{8, 0.0});
  Var small = ops::downsample_avg2x(make_const(img));
  Var direct = disc.discriminate(small, make_const(cond), ScaleState{4, 1.0});
  for (int64_t i = 0; i < 2; ++i) CHECK(blended->value.at(i) == direct->value.at(i));
}

TEST_CASE("identical batch rows get identical scores") {
  Rng rng = Rng::seeded(6, 6);
  Discriminator disc(21);
  Tensor one_img = random_tensor({1, 3, 4, 4}, rng, 0.3f);
  Tensor one_cond = random_tensor({1, 63, 64, 64}, rng, 0.3f);
  Tensor img({3, 3, 4, 4});
  Tensor cond({3, 63, 64, 64});
  for (int64_t n = 0; n < 3; ++n) {
    std::copy(one_img.data(), one_img.data() + one_img.size(), img.data() + n * one_img.size());
    std::copy(one_cond.data(), one_cond.data() + one_cond.size(),
              cond.data() + n * one_cond.size());
  }
  Var score = disc.discriminate(make_const(img), make_const(cond), ScaleState{4, 1.0});
  CHECK(score->value.at(0) == score->value.at(1));
  CHECK(score->value.at(1) == score->value.at(2));
}

TEST_CASE("discriminator rejects shape mismatches") {
  Discriminator disc(23);
  Tensor cond({1, 63, 64, 64});
  CHECK_THROWS_AS(
      disc.discriminate(make_const(Tensor({1, 3, 8, 8})), make_const(cond), ScaleState{4, 1.0}),
      ShapeError);
  CHECK_THROWS_AS(
      disc.discriminate(make_const(Tensor({1, 3, 4, 4})), make_const(Tensor({1, 62, 64, 64})),
                        ScaleState{4, 1.0}),
      ShapeError);
}

TEST_SUITE_END();
