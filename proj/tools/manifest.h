#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace pracsim::cli {

// Everything needed to regenerate a set of outputs. Paths are stored by
// file name so a manifest stays valid when its directory moves.
struct RunManifest {
  std::string command;
  // Arguments after the subcommand, output locations stripped.
  std::vector<std::string> arguments;
  // Canonical configuration document, when the command took one.
  std::string config;
  std::map<std::string, std::string> presets;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> outputs;
  std::string version;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest load_manifest(const std::filesystem::path& path);

// Writes text to a file, or to stdout when the path is empty.
void emit(const std::filesystem::path& path, const std::string& text);

}  // namespace pracsim::cli
