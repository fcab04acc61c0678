#pragma once

// Every CLI command writes exactly one manifest.json into its output
// directory: the command, config and input hashes, produced outputs with
// their hashes, seed, and timestamps. verify() re-hashes everything.

#include <map>
#include <string>
#include <vector>

namespace sgt {

inline constexpr const char* kCodeVersion = "sgt 0.1.0";

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_sha256;               // empty when no config file
  std::map<std::string, std::string> inputs;   // label -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  uint64_t seed = 0;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;
  std::string code_version = kCodeVersion;
};

std::string iso8601_utc_now();

// Serializes to out_dir/manifest.json, hashing every listed output first
// (paths are relative to out_dir).
void write_manifest(const std::string& out_dir, RunManifest manifest);

RunManifest read_manifest(const std::string& out_dir);

// Re-hashes outputs against the recorded digests; throws on mismatch.
void verify_manifest(const std::string& out_dir);

}  // namespace sgt
