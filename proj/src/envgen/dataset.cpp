#include "envgen/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "core/errors.hpp"
#include "envgen/topdown_view.hpp"
#include "io/pbm_io.hpp"
#include "io/png_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace topdown {

namespace {

std::string step_file(const char* prefix, int step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.%s", prefix, step, ext);
  return buf;
}

std::string episode_dir_name(uint64_t env_seed, int episode_index, int episodes_per_env) {
  char buf[64];
  if (episodes_per_env <= 1) {
    std::snprintf(buf, sizeof(buf), "ep_%06" PRIu64, env_seed);
  } else {
    std::snprintf(buf, sizeof(buf), "ep_%06" PRIu64 "_%02d", env_seed, episode_index);
  }
  return buf;
}

std::vector<std::string> episode_files(int steps) {
  std::vector<std::string> names;
  for (int t = 0; t < steps; ++t) names.push_back(step_file("obs", t, "png"));
  names.push_back("poses.csv");
  for (int t = 0; t < steps; ++t) names.push_back(step_file("target", t, "png"));
  for (int t = 0; t < steps; ++t) names.push_back(step_file("visibility", t, "pbm"));
  std::sort(names.begin(), names.end());
  return names;
}

json rgb_to_json(const Rgb8& c) { return json::array({c[0], c[1], c[2]}); }

Rgb8 rgb_from_json(const json& j) {
  return Rgb8{j.at(0).get<uint8_t>(), j.at(1).get<uint8_t>(), j.at(2).get<uint8_t>()};
}

json config_to_json(const DatasetConfig& cfg) {
  const GenConfig& g = cfg.gen;
  json colors = {
      {"wall", rgb_to_json(g.wall_color)},       {"floor", rgb_to_json(g.floor_color)},
      {"background", rgb_to_json(g.background_color)}, {"unknown", rgb_to_json(g.unknown_color)},
      {"agent", rgb_to_json(g.agent_color)},
  };
  json palette = json::array();
  for (const auto& c : object_palette()) palette.push_back(rgb_to_json(c));
  return json{
      {"room_size", g.room_size},
      {"wall_height", g.wall_height},
      {"agent_height", g.agent_height},
      {"fov_deg", g.fov_deg},
      {"image_size", g.image_size},
      {"min_objects", g.min_objects},
      {"max_objects", g.max_objects},
      {"min_half_extent", g.min_half_extent},
      {"max_half_extent", g.max_half_extent},
      {"min_obj_height", g.min_obj_height},
      {"max_obj_height", g.max_obj_height},
      {"wall_margin", g.wall_margin},
      {"object_gap", g.object_gap},
      {"agent_clearance", g.agent_clearance},
      {"agent_wall_margin", g.agent_wall_margin},
      {"placement_attempts", g.placement_attempts},
      {"colors", colors},
      {"palette", palette},
      {"episode_len", cfg.episode_len},
      {"policy", cfg.policy == RotationPolicy::Kind::kFixedIncrement ? "fixed" : "random"},
  };
}

DatasetConfig config_from_json(const json& j) {
  DatasetConfig cfg;
  GenConfig& g = cfg.gen;
  g.room_size = j.at("room_size").get<double>();
  g.wall_height = j.at("wall_height").get<double>();
  g.agent_height = j.at("agent_height").get<double>();
  g.fov_deg = j.at("fov_deg").get<double>();
  g.image_size = j.at("image_size").get<int>();
  g.min_objects = j.at("min_objects").get<int>();
  g.max_objects = j.at("max_objects").get<int>();
  g.min_half_extent = j.at("min_half_extent").get<double>();
  g.max_half_extent = j.at("max_half_extent").get<double>();
  g.min_obj_height = j.at("min_obj_height").get<double>();
  g.max_obj_height = j.at("max_obj_height").get<double>();
  g.wall_margin = j.at("wall_margin").get<double>();
  g.object_gap = j.at("object_gap").get<double>();
  g.agent_clearance = j.at("agent_clearance").get<double>();
  g.agent_wall_margin = j.at("agent_wall_margin").get<double>();
  g.placement_attempts = j.at("placement_attempts").get<int>();
  const json& colors = j.at("colors");
  g.wall_color = rgb_from_json(colors.at("wall"));
  g.floor_color = rgb_from_json(colors.at("floor"));
  g.background_color = rgb_from_json(colors.at("background"));
  g.unknown_color = rgb_from_json(colors.at("unknown"));
  g.agent_color = rgb_from_json(colors.at("agent"));
  cfg.episode_len = j.at("episode_len").get<int>();
  cfg.policy = j.at("policy").get<std::string>() == "fixed"
                   ? RotationPolicy::Kind::kFixedIncrement
                   : RotationPolicy::Kind::kRandomIncrement;
  return cfg;
}

void write_poses_csv(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "step,x,z,yaw\n";
  char buf[160];
  for (size_t i = 0; i < poses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", i, poses[i].position.x,
                  poses[i].position.z, poses[i].yaw);
    out << buf;
  }
}

std::vector<Pose> read_poses_csv(const std::string& path, int steps) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "step,x,z,yaw") throw DataError("bad poses.csv header in " + path);
  std::vector<Pose> poses;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Pose p;
    long step = 0;
    if (std::sscanf(line.c_str(), "%ld,%lg,%lg,%lg", &step, &p.position.x, &p.position.z,
                    &p.yaw) != 4)
      throw DataError("bad poses.csv row in " + path + ": " + line);
    poses.push_back(p);
  }
  if (static_cast<int>(poses.size()) != steps)
    throw DataError("poses.csv row count mismatch in " + path);
  return poses;
}

uint32_t file_crc32(uint32_t crc, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file for checksum: " + path);
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize n = in.gcount();
    if (n > 0)
      crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(n));
  }
  return crc;
}

void write_episode_files(const std::string& dir, const Episode& ep) {
  fs::create_directories(dir);
  for (int t = 0; t < ep.length(); ++t) {
    write_png(dir + "/" + step_file("obs", t, "png"), ep.frames[static_cast<size_t>(t)]);
    write_png(dir + "/" + step_file("target", t, "png"), ep.targets[static_cast<size_t>(t)]);
    write_pbm(dir + "/" + step_file("visibility", t, "pbm"),
              ep.visibility[static_cast<size_t>(t)]);
  }
  write_poses_csv(dir + "/poses.csv", ep.poses);
}

Episode read_episode_files(const std::string& dir, const DatasetConfig& cfg, uint64_t env_seed,
                           int episode_index, int steps) {
  Episode ep;
  ep.env = sample_environment(env_seed, cfg.gen);
  ep.poses = read_poses_csv(dir + "/poses.csv", steps);
  for (int t = 0; t < steps; ++t) {
    ep.frames.push_back(read_png(dir + "/" + step_file("obs", t, "png")));
    ep.targets.push_back(read_png(dir + "/" + step_file("target", t, "png")));
    ep.visibility.push_back(read_pbm(dir + "/" + step_file("visibility", t, "pbm")));
  }
  (void)episode_index;
  return ep;
}

}  // namespace

uint64_t episode_seed(uint64_t env_seed, int episode_index) {
  uint64_t k = static_cast<uint64_t>(episode_index) + 1;
  return env_seed ^ (k * 0x9e3779b97f4a7c15ULL + (k << 17));
}

Episode generate_episode(const DatasetConfig& config, uint64_t env_seed, int episode_index) {
  EnvironmentSpec env = sample_environment(env_seed, config.gen);
  RotationPolicy policy;
  policy.kind = config.policy;
  policy.seed = episode_seed(env_seed, episode_index);
  return simulate_episode(env, config.episode_len, policy, config.gen);
}

std::string episode_checksum(const std::string& episode_dir, int steps) {
  uint32_t crc = crc32(0L, Z_NULL, 0);
  for (const std::string& name : episode_files(steps))
    crc = file_crc32(crc, episode_dir + "/" + name);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

std::string write_dataset(const DatasetConfig& config, const std::string& root) {
  if (config.train.env_count < 0 || config.test.env_count < 0)
    throw ConfigError("negative environment counts");
  // Seed ranges must be disjoint between splits.
  uint64_t train_end = config.train.env_seed_begin + static_cast<uint64_t>(config.train.env_count);
  uint64_t test_end = config.test.env_seed_begin + static_cast<uint64_t>(config.test.env_count);
  bool overlap = config.train.env_seed_begin < test_end && config.test.env_seed_begin < train_end &&
                 config.train.env_count > 0 && config.test.env_count > 0;
  if (overlap) throw ConfigError("train/test env seed ranges overlap");

  fs::create_directories(root);
  json episodes = json::array();
  for (const auto& [split_name, split] :
       {std::pair<std::string, SplitSpec>{"train", config.train}, {"test", config.test}}) {
    for (int e = 0; e < split.env_count; ++e) {
      uint64_t env_seed = split.env_seed_begin + static_cast<uint64_t>(e);
      for (int k = 0; k < split.episodes_per_env; ++k) {
        Episode ep = generate_episode(config, env_seed, k);
        std::string rel = split_name + "/" + episode_dir_name(env_seed, k, split.episodes_per_env);
        std::string dir = root + "/" + rel;
        write_episode_files(dir, ep);
        episodes.push_back(json{{"split", split_name},
                                {"dir", rel},
                                {"env_seed", env_seed},
                                {"episode_index", k},
                                {"steps", ep.length()},
                                {"crc32", episode_checksum(dir, ep.length())}});
      }
    }
  }

  json manifest = {
      {"format_version", 1},
      {"config", config_to_json(config)},
      {"splits",
       {{"train",
         {{"env_seed_begin", config.train.env_seed_begin},
          {"env_count", config.train.env_count},
          {"episodes_per_env", config.train.episodes_per_env}}},
        {"test",
         {{"env_seed_begin", config.test.env_seed_begin},
          {"env_count", config.test.env_count},
          {"episodes_per_env", config.test.episodes_per_env}}}}},
      {"episodes", episodes},
  };
  std::string manifest_path = root + "/manifest.json";
  std::string tmp_path = manifest_path + ".tmp";
  {
    std::ofstream out(tmp_path);
    if (!out) throw DataError("cannot write " + tmp_path);
    out << manifest.dump(2) << "\n";
  }
  fs::rename(tmp_path, manifest_path);
  return manifest_path;
}

namespace {

json load_manifest(const std::string& root) {
  std::string path = root + "/manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("missing manifest: " + path);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("corrupt manifest " + path + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != 1)
    throw DataError("unsupported dataset format version in " + path);
  return manifest;
}

SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  s.env_seed_begin = j.at("env_seed_begin").get<uint64_t>();
  s.env_count = j.at("env_count").get<int>();
  s.episodes_per_env = j.at("episodes_per_env").get<int>();
  return s;
}

}  // namespace

DatasetConfig read_dataset_config(const std::string& root) {
  json manifest = load_manifest(root);
  DatasetConfig cfg = config_from_json(manifest.at("config"));
  cfg.train = split_from_json(manifest.at("splits").at("train"));
  cfg.test = split_from_json(manifest.at("splits").at("test"));
  return cfg;
}

const std::vector<LoadedEpisode>& LoadedDataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "test") return test;
  throw DataError("unknown split: " + name);
}

LoadedDataset read_dataset(const std::string& root) {
  json manifest = load_manifest(root);
  LoadedDataset ds;
  ds.config = config_from_json(manifest.at("config"));
  ds.config.train = split_from_json(manifest.at("splits").at("train"));
  ds.config.test = split_from_json(manifest.at("splits").at("test"));

  int expected_train = ds.config.train.env_count * ds.config.train.episodes_per_env;
  int expected_test = ds.config.test.env_count * ds.config.test.episodes_per_env;

  for (const json& j : manifest.at("episodes")) {
    EpisodeRef ref;
    ref.split = j.at("split").get<std::string>();
    ref.dir = j.at("dir").get<std::string>();
    ref.env_seed = j.at("env_seed").get<uint64_t>();
    ref.episode_index = j.at("episode_index").get<int>();
    ref.steps = j.at("steps").get<int>();
    ref.crc32_hex = j.at("crc32").get<std::string>();

    std::string dir = root + "/" + ref.dir;
    if (!fs::exists(dir)) throw DataError("corrupt dataset: missing episode dir " + dir);
    std::string crc = episode_checksum(dir, ref.steps);
    if (crc != ref.crc32_hex)
      throw DataError("checksum mismatch for " + dir + " (manifest " + ref.crc32_hex +
                      ", actual " + crc + ")");
    LoadedEpisode le;
    le.ref = ref;
    le.data = read_episode_files(dir, ds.config, ref.env_seed, ref.episode_index, ref.steps);
    if (ref.split == "train")
      ds.train.push_back(std::move(le));
    else if (ref.split == "test")
      ds.test.push_back(std::move(le));
    else
      throw DataError("corrupt dataset: unknown split " + ref.split);
  }
  if (static_cast<int>(ds.train.size()) != expected_train ||
      static_cast<int>(ds.test.size()) != expected_test)
    throw DataError("corrupt dataset: episode count mismatch vs manifest splits");
  return ds;
}

}  // namespace topdown
