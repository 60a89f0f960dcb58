// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pinnflow {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string iso_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::write(const std::filesystem::path& path) const {
  for (const auto& a : artifacts)
    if (!std::filesystem::exists(a))
      throw std::runtime_error("manifest lists missing artifact: " + a);
  nlohmann::ordered_json j;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash));
  j["command"] = command;
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["provenance"] = provenance;
  j["artifacts"] = artifacts;
  j["started"] = started;
  j["finished"] = finished;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace pinnflow
