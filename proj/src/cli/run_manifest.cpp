#include "cli/run_manifest.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "core/errors.hpp"

namespace topdown {

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_crc32_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  uint32_t crc = crc32(0L, Z_NULL, 0);
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(n));
  }
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08x", crc);
  return hex;
}

void write_run_manifest(const std::string& dir, const RunManifest& manifest) {
  std::filesystem::create_directories(dir);
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : manifest.resolved_config) config[k] = v;
  nlohmann::json j = {
      {"command", manifest.command},
      {"config", config},
      {"seed", manifest.seed},
      {"version", manifest.version},
      {"started_at", manifest.started_at},
      {"dataset_checksum", manifest.dataset_checksum},
  };
  std::string path = dir + "/run_manifest.json";
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace topdown
