#include "scdf/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

using nlohmann::json;

namespace {

// SOURCE_DATE_EPOCH, when set, replaces the wall clock.
std::string utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

json digest_json(const FileDigest& d) {
  return {{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}};
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(detail::read_file(path));
}

FileDigest digest_file(const std::filesystem::path& path) {
  const auto content = detail::read_file(path);
  return FileDigest{path.string(), sha256_hex(content), content.size()};
}

json RunManifest::to_json() const {
  json in = json::array();
  for (const auto& d : inputs) in.push_back(digest_json(d));
  json out = json::array();
  for (const auto& d : outputs) out.push_back(digest_json(d));
  return {{"run_id", run_id},         {"command", command},
          {"tool_version", tool_version}, {"config", config},
          {"inputs", std::move(in)},  {"outputs", std::move(out)},
          {"started_at", started_at}, {"finished_at", finished_at}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.command = j.value("command", "");
  m.tool_version = j.value("tool_version", "");
  m.config = j.value("config", json::object());
  for (const auto& d : j.value("inputs", json::array())) {
    m.inputs.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>(),
                        d.value("bytes", uintmax_t{0})});
  }
  for (const auto& d : j.value("outputs", json::array())) {
    m.outputs.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>(),
                         d.value("bytes", uintmax_t{0})});
  }
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

RunManifest begin_manifest(std::string command, json config,
                           const std::vector<std::filesystem::path>& inputs) {
  RunManifest m;
  m.command = std::move(command);
  m.config = std::move(config);
  for (const auto& p : inputs) m.inputs.push_back(digest_file(p));
  std::string identity = m.command + "\n" + m.config.dump() + "\n";
  for (const auto& d : m.inputs) identity += d.sha256 + "\n";
  m.run_id = sha256_hex(identity).substr(0, 16);
  m.started_at = utc_now();
  return m;
}

void finish_manifest(RunManifest& manifest, const std::filesystem::path& dir,
                     const std::vector<std::string>& outputs) {
  manifest.outputs.clear();
  for (const auto& name : outputs) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) continue;
    auto d = digest_file(path);
    d.path = name;
    manifest.outputs.push_back(std::move(d));
  }
  manifest.finished_at = utc_now();
  detail::write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

std::vector<std::string> changed_inputs(const RunManifest& manifest) {
  std::vector<std::string> changed;
  for (const auto& d : manifest.inputs) {
    if (!std::filesystem::exists(d.path) || sha256_file(d.path) != d.sha256) {
      changed.push_back(d.path);
    }
  }
  return changed;
}

}  // namespace scdf
