#include "sgt/manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sgt/hash.hpp"

namespace sgt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const std::string& out_dir, RunManifest manifest) {
  for (auto& [rel, digest] : manifest.outputs) {
    if (digest.empty()) digest = sha256_file((fs::path(out_dir) / rel).string());
  }
  json j;
  j["command"] = manifest.command;
  j["config_path"] = manifest.config_path;
  j["config_sha256"] = manifest.config_sha256;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["seed"] = manifest.seed;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["code_version"] = manifest.code_version;
  std::ofstream out(fs::path(out_dir) / "manifest.json",
                    std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
  out << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& out_dir) {
  std::ifstream in(fs::path(out_dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + out_dir);
  json j = json::parse(in);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_path = j.at("config_path").get<std::string>();
  m.config_sha256 = j.at("config_sha256").get<std::string>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<uint64_t>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  return m;
}

void verify_manifest(const std::string& out_dir) {
  const RunManifest m = read_manifest(out_dir);
  for (const auto& [rel, digest] : m.outputs) {
    const std::string actual =
        sha256_file((fs::path(out_dir) / rel).string());
    if (actual != digest)
      throw std::runtime_error("manifest verification failed for " + rel +
                               " in " + out_dir);
  }
}

}  // namespace sgt
