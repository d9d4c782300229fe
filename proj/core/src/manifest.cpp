#include "cbstrat/manifest.hpp"

#include <cstdio>

#include <json.hpp>

#include "cbstrat/csv.hpp"

namespace cbstrat {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string file_digest(const std::string& path) {
  return "fnv1a64:" + hex64(fnv1a64(read_text_file(path)));
}

void write_manifest_json(const std::string& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["stage"] = manifest.stage;
  j["tool_version"] = manifest.tool_version;
  j["config_digest"] = manifest.config_digest;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [p, d] : manifest.inputs) inputs[p] = d;
  j["inputs"] = inputs;
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [p, d] : manifest.outputs) outputs[p] = d;
  j["outputs"] = outputs;
  j["wall_ms"] = manifest.wall_ms;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace cbstrat
