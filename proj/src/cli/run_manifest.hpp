#pragma once

#include <map>
#include <string>

namespace topdown {

inline constexpr const char* kVersionString = "topdown 0.1.0";

// Reproducibility record written before any long-running work: the command,
// every resolved config key, the seed, and the input dataset checksum.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> resolved_config;
  uint64_t seed = 0;
  std::string version = kVersionString;
  std::string started_at;         // ISO-8601 UTC
  std::string dataset_checksum;   // crc32 of the input dataset manifest, if any
};

std::string iso8601_utc_now();
std::string file_crc32_hex(const std::string& path);  // empty if unreadable

// Writes <dir>/run_manifest.json (creating dir if needed).
void write_run_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace topdown
