#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "envgen/dataset.hpp"
#include "io/pbm_io.hpp"
#include "io/png_io.hpp"

using namespace topdown;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  std::string path = (fs::temp_directory_path() / name).string();
  fs::remove_all(path);
  return path;
}

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.episode_len = 4;
  cfg.train = SplitSpec{900, 2, 1};
  cfg.test = SplitSpec{902, 1, 1};
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("png round trip is bit exact") {
  Image8 img(16, 16);
  Rng rng = Rng::seeded(5, 5);
  for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.next_u32() & 0xff);
  std::string path = fresh_dir("topdown_png_test") + ".png";
  write_png(path, img);
  Image8 back = read_png(path);
  CHECK(img == back);
  fs::remove(path);
}

TEST_CASE("pbm round trip is bit exact") {
  BitGrid grid(13, 9);  // width not a byte multiple
  Rng rng = Rng::seeded(6, 6);
  for (auto& c : grid.cells) c = rng.next_u32() & 1;
  std::string path = fresh_dir("topdown_pbm_test") + ".pbm";
  write_pbm(path, grid);
  BitGrid back = read_pbm(path);
  CHECK(grid == back);
  fs::remove(path);
}

TEST_CASE("dataset write/read round trip reproduces all tensors and metadata") {
  std::string root = fresh_dir("topdown_ds_roundtrip");
  DatasetConfig cfg = small_config();
  std::string manifest = write_dataset(cfg, root);
  CHECK(fs::exists(manifest));

  LoadedDataset ds = read_dataset(root);
  REQUIRE(ds.train.size() == 2);
  REQUIRE(ds.test.size() == 1);
  for (const auto& le : ds.train) {
    Episode expected = generate_episode(cfg, le.ref.env_seed, le.ref.episode_index);
    REQUIRE(le.data.length() == expected.length());
    for (int t = 0; t < expected.length(); ++t) {
      CHECK(le.data.frames[t] == expected.frames[t]);
      CHECK(le.data.targets[t] == expected.targets[t]);
      CHECK(le.data.visibility[t] == expected.visibility[t]);
      CHECK(le.data.poses[t].position.x == expected.poses[t].position.x);
      CHECK(le.data.poses[t].yaw == expected.poses[t].yaw);
    }
    CHECK(le.data.env == expected.env);
  }
  fs::remove_all(root);
}

TEST_CASE("two writes of the same seeded generation give identical checksums") {
  std::string a = fresh_dir("topdown_ds_a");
  std::string b = fresh_dir("topdown_ds_b");
  DatasetConfig cfg = small_config();
  write_dataset(cfg, a);
  write_dataset(cfg, b);
  LoadedDataset da = read_dataset(a);
  LoadedDataset db = read_dataset(b);
  REQUIRE(da.train.size() == db.train.size());
  for (size_t i = 0; i < da.train.size(); ++i)
    CHECK(da.train[i].ref.crc32_hex == db.train[i].ref.crc32_hex);
  // manifest bytes themselves are identical
  std::ifstream fa(a + "/manifest.json"), fb(b + "/manifest.json");
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("corrupt datasets are rejected") {
  std::string root = fresh_dir("topdown_ds_corrupt");
  DatasetConfig cfg = small_config();
  write_dataset(cfg, root);

  SUBCASE("missing episode directory") {
    fs::remove_all(root + "/train/ep_000901");
    CHECK_THROWS_AS(read_dataset(root), DataError);
  }
  SUBCASE("flipped byte fails the checksum") {
    std::string victim = root + "/train/ep_000900/obs_00001.png";
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    char ch;
    f.seekg(40);
    f.get(ch);
    f.seekp(40);
    f.put(static_cast<char>(ch ^ 0x01));
    f.close();
    CHECK_THROWS_AS(read_dataset(root), DataError);
  }
  SUBCASE("missing manifest") {
    fs::remove(root + "/manifest.json");
    CHECK_THROWS_AS(read_dataset(root), DataError);
  }
  fs::remove_all(root);
}

TEST_CASE("overlapping split seed ranges are rejected") {
  DatasetConfig cfg = small_config();
  cfg.test.env_seed_begin = cfg.train.env_seed_begin + 1;  // overlaps train range
  std::string root = fresh_dir("topdown_ds_overlap");
  CHECK_THROWS_AS(write_dataset(cfg, root), ConfigError);
  fs::remove_all(root);
}

TEST_CASE("episodes_per_env produces distinct episodes of one environment") {
  std::string root = fresh_dir("topdown_ds_multi");
  DatasetConfig cfg = small_config();
  cfg.train = SplitSpec{950, 1, 3};
  cfg.test = SplitSpec{951, 1, 1};
  write_dataset(cfg, root);
  LoadedDataset ds = read_dataset(root);
  REQUIRE(ds.train.size() == 3);
  CHECK(ds.train[0].data.env == ds.train[1].data.env);
  // Different initial yaw per episode
  CHECK(ds.train[0].data.poses[0].yaw != ds.train[1].data.poses[0].yaw);
  CHECK(ds.train[1].data.poses[0].yaw != ds.train[2].data.poses[0].yaw);
  fs::remove_all(root);
}

TEST_SUITE_END();
