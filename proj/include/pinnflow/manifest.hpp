// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pinnflow {

std::uint64_t fnv1a64(std::string_view s);
std::string iso_timestamp_now();

// Record of one CLI run: what configuration produced which artifacts. Every
// listed artifact exists when the manifest is written (it goes last).
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string provenance;
  std::vector<std::string> artifacts;
  std::string started;
  std::string finished;

  void write(const std::filesystem::path& path) const;
};

}  // namespace pinnflow
