#include "manifest.h"

#include <fstream>
#include <iostream>

#include "pracsim/error.h"

namespace pracsim::cli {

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["artifact_version"] = m.version;
  j["command"] = m.command;
  j["arguments"] = m.arguments;
  if (!m.config.empty()) j["config"] = m.config;
  j["presets"] = m.presets;
  j["seeds"] = m.seeds;
  j["outputs"] = m.outputs;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.version = j.at("artifact_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    if (j.contains("config")) m.config = j.at("config").get<std::string>();
    m.presets = j.at("presets").get<std::map<std::string, std::string>>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
  emit(path, to_json(m).dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("manifest " + path.string() + " is not valid JSON");
  return manifest_from_json(j);
}

void emit(const std::filesystem::path& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace pracsim::cli
