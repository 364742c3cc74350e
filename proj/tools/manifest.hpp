#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace detgeo::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record written next to every subcommand's output.
struct RunManifest {
  std::string subcommand;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, sha256 hex
  std::string tool_version = kToolVersion;
  std::string timestamp;  // UTC, ISO-8601

  // Digest a file, or every regular file under a directory (sorted).
  void add_input(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

// Pretty-printed JSON with every float rendered at 9 significant digits
// (the stock printer may emit a longer round-trip form).
std::string dump_json(const nlohmann::json& j);

}  // namespace detgeo::cli
