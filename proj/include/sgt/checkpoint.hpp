#pragma once

// On-disk container for model parameters. Layout (all integers little
// endian):
//
//   magic            4 bytes ("SGTC" target model, "SGTS" transform)
//   version          u32
//   config_len       u32, then config_len bytes of UTF-8 "key=value\n" lines
//   payload_sha256   32 bytes, digest of everything after this field
//   block_count      u32
//   per block:       u32 name_len, name bytes,
//                    u32 rank, u32 dims[rank],
//                    float32 data in row-major order
//
// Round-trips are bit-exact; the digest is verified on load.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgt {

struct CheckpointBlock {
  std::string name;
  std::vector<uint32_t> shape;
  std::vector<float> data;  // row-major
};

struct Checkpoint {
  std::string magic;  // 4 chars
  uint32_t version = 1;
  std::map<std::string, std::string> config;
  std::vector<CheckpointBlock> blocks;

  const CheckpointBlock& block(const std::string& name) const;
  const std::string& config_at(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path,
                           const std::string& expected_magic);

// Embedding dump ("SGTE"): header magic, u32 version, u32 d, u32 T,
// u32 count, u8 has_ids; then per sequence optional u32 ids[T] followed by
// float32 data[T*d] row-major (row = position).
struct EmbeddingDump {
  uint32_t d = 0;
  uint32_t seq_len = 0;
  bool has_ids = true;
  std::vector<std::vector<int>> ids;       // count x T (when has_ids)
  std::vector<std::vector<float>> floats;  // count x (T*d), row-major
};

void save_embedding_dump(const std::string& path, const EmbeddingDump& dump);
EmbeddingDump load_embedding_dump(const std::string& path);

}  // namespace sgt
