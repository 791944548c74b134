#pragma once

// Run manifests: every CLI command writes a JSON manifest next to its outputs
// with the full config snapshot, seed, and a content hash per artifact.
// Written atomically (temp file + rename).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfmri/errors.hpp"

namespace qfmri::manifest {

// FNV-1a 64-bit over file bytes.
inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("file_hash: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;

  void write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    const auto now = std::chrono::system_clock::now();
    j["created_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            now.time_since_epoch())
            .count();
    auto& arts = j["artifacts"];
    for (const auto& a : artifacts) {
      char hex[19];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(file_hash(a)));
      arts.push_back({{"path", a}, {"fnv1a64", std::string(hex)}});
    }
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw DataError("RunManifest::write: cannot open " + tmp);
      out << j.dump(2) << "\n";
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
      throw DataError("RunManifest::write: rename failed for " + path);
  }
};

}  // namespace qfmri::manifest
