#pragma once

#include <string>
#include <vector>

#include "envgen/episode.hpp"

namespace topdown {

struct SplitSpec {
  uint64_t env_seed_begin = 0;
  int env_count = 0;
  int episodes_per_env = 1;
};

struct DatasetConfig {
  GenConfig gen;
  int episode_len = 40;
  RotationPolicy::Kind policy = RotationPolicy::Kind::kFixedIncrement;
  SplitSpec train;
  SplitSpec test;
};

// Stream for one episode's yaw sequence; distinct per (env_seed, index).
uint64_t episode_seed(uint64_t env_seed, int episode_index);

// Deterministic generation of one episode of a dataset.
Episode generate_episode(const DatasetConfig& config, uint64_t env_seed, int episode_index);

// Generates both splits under root and writes manifest.json last (via a
// temp file + rename). Returns the manifest path.
std::string write_dataset(const DatasetConfig& config, const std::string& root);

struct EpisodeRef {
  std::string split;
  std::string dir;  // relative to root
  uint64_t env_seed = 0;
  int episode_index = 0;
  int steps = 0;
  std::string crc32_hex;
};

struct LoadedEpisode {
  EpisodeRef ref;
  Episode data;
};

struct LoadedDataset {
  DatasetConfig config;
  std::vector<LoadedEpisode> train;
  std::vector<LoadedEpisode> test;

  const std::vector<LoadedEpisode>& split(const std::string& name) const;
};

// Parses the manifest, checks split seed disjointness and episode counts,
// verifies per-episode checksums, and loads every tensor. The environment
// spec is regenerated from (env_seed, config), which reproduces the
// generation-time spec exactly.
LoadedDataset read_dataset(const std::string& root);

// Manifest-only parse (config + refs), no pixel data.
DatasetConfig read_dataset_config(const std::string& root);

// CRC32 (zlib) over the episode's files in sorted filename order.
std::string episode_checksum(const std::string& episode_dir, int steps);

}  // namespace topdown
