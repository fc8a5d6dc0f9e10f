#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <fmt/format.h>

#include "scdf/dataset.hpp"
#include "scdf/index_core.hpp"

namespace scdf::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("scdf_test_{}", name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline IndexSeries series(EntityKind kind, std::string_view name, MonthStamp start,
                          std::initializer_list<double> values) {
  std::vector<Observation> obs;
  MonthStamp m = start;
  for (double v : values) {
    obs.push_back({m, v});
    m = m.next();
  }
  return IndexSeries(EntityId(kind, name), std::move(obs));
}

inline NewsArticle article(std::string id, Date published, const EntityId& entity,
                           std::string title, std::string text = "") {
  NewsArticle a;
  a.id = std::move(id);
  a.published = published;
  a.title = std::move(title);
  a.text = std::move(text);
  a.entities = {entity};
  return a;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Runs the CLI binary; returns its exit status.
inline int run_scdf(const std::string& args, const std::filesystem::path& log = {}) {
  std::string cmd = fmt::format("\"{}\" {}", SCDF_CLI_PATH, args);
  if (!log.empty()) cmd += fmt::format(" > \"{0}\" 2>&1", log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace scdf::testing
