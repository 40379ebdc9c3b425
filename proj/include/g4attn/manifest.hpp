#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "g4attn/common.hpp"

namespace g4attn {

inline constexpr const char* kToolVersion = "1.0.0";

// Reproducibility sidecar written next to every output: the subcommand, its
// resolved settings, digests of the inputs, and the seed. Two runs whose
// manifests agree (timestamp aside) produce byte-identical outputs.
struct PipelineManifest {
  std::string subcommand;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_digests;  // path -> fnv1a64 hex
  uint64_t seed = 0;

  void add_input(const std::string& path) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file(path))));
    input_digests[path] = hex;
  }

  nlohmann::json to_json(bool with_timestamp = true) const {
    nlohmann::json j;
    j["tool"] = "g4attn";
    j["version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = input_digests;
    if (with_timestamp) {
      const auto now = std::chrono::system_clock::now();
      j["timestamp_unix_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    }
    return j;
  }

  // Written as <output>.manifest.json.
  void write_for(const std::string& output_path) const {
    write_file(output_path + ".manifest.json", to_json().dump(2) + "\n");
  }
};

}  // namespace g4attn
