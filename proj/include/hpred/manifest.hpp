#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hpred::manifest {

/// SHA-1 of "blob <size>\0" + content, hex encoded; equals `git hash-object`.
std::string git_blob_hash(std::string_view content);

/// Hash of a file's bytes. Throws InputNotFound when it cannot be read.
std::string file_hash(const std::filesystem::path& file);

struct FileRecord {
  std::string path;
  std::string hash;
};

/// What a CLI run read and wrote. Carries no timestamps so reruns produce
/// the same file.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;

  void add_input(const std::filesystem::path& file);
  void add_output(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

}  // namespace hpred::manifest
