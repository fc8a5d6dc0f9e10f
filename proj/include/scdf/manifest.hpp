#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace scdf {

inline constexpr std::string_view kToolVersion = "0.3.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
  uintmax_t bytes = 0;
};

FileDigest digest_file(const std::filesystem::path& path);

// Written as manifest.json in every output directory. `run_id` is a digest
// of the command, config and input digests, so identical runs share an id.
struct RunManifest {
  std::string run_id;
  std::string command;
  nlohmann::json config;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string started_at;
  std::string finished_at;
  std::string tool_version{kToolVersion};

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

RunManifest begin_manifest(std::string command, nlohmann::json config,
                           const std::vector<std::filesystem::path>& inputs);
// Digests `outputs` (relative to `dir`), stamps the finish time and writes
// dir/manifest.json.
void finish_manifest(RunManifest& manifest, const std::filesystem::path& dir,
                     const std::vector<std::string>& outputs);

// Returns the paths among the manifest's inputs whose current digest differs.
std::vector<std::string> changed_inputs(const RunManifest& manifest);

}  // namespace scdf
