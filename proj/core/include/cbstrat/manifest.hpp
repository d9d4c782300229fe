#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbstrat {

inline constexpr const char* kToolVersion = "cbstrat 0.1.0";

// Non-cryptographic content digest used for reproducibility manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::string file_digest(const std::string& path);  // "fnv1a64:<hex>"

struct RunManifest {
  std::string stage;
  std::string tool_version = kToolVersion;
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, digest)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, digest)
  double wall_ms = 0.0;
};

void write_manifest_json(const std::string& path, const RunManifest& manifest);

}  // namespace cbstrat
