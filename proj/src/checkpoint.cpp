#include "sgt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sgt/hash.hpp"

namespace sgt {

namespace {

void put_u32(std::string& out, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xFF);
  b[1] = static_cast<char>((v >> 8) & 0xFF);
  b[2] = static_cast<char>((v >> 16) & 0xFF);
  b[3] = static_cast<char>((v >> 24) & 0xFF);
  out.append(b, 4);
}

uint32_t get_u32(const std::string& in, size_t& at) {
  if (at + 4 > in.size()) throw std::runtime_error("checkpoint: truncated");
  const auto* b = reinterpret_cast<const unsigned char*>(in.data() + at);
  at += 4;
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

std::string take(const std::string& in, size_t& at, size_t n) {
  if (at + n > in.size()) throw std::runtime_error("checkpoint: truncated");
  std::string s = in.substr(at, n);
  at += n;
  return s;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

std::string digest_raw(const std::string& bytes) {
  const std::string hex = sha256_hex(bytes);
  std::string raw(32, '\0');
  for (int i = 0; i < 32; ++i) {
    auto nib = [&](char c) -> int {
      return c <= '9' ? c - '0' : c - 'a' + 10;
    };
    raw[i] = static_cast<char>((nib(hex[2 * i]) << 4) | nib(hex[2 * i + 1]));
  }
  return raw;
}

}  // namespace

const CheckpointBlock& Checkpoint::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::out_of_range("checkpoint: no block named '" + name + "'");
}

const std::string& Checkpoint::config_at(const std::string& key) const {
  const auto it = config.find(key);
  if (it == config.end())
    throw std::out_of_range("checkpoint: no config key '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.magic.size() != 4)
    throw std::invalid_argument("checkpoint magic must be 4 bytes");
  std::string payload;
  put_u32(payload, static_cast<uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) {
    put_u32(payload, static_cast<uint32_t>(b.name.size()));
    payload += b.name;
    put_u32(payload, static_cast<uint32_t>(b.shape.size()));
    size_t n = 1;
    for (uint32_t d : b.shape) {
      put_u32(payload, d);
      n *= d;
    }
    if (n != b.data.size())
      throw std::invalid_argument("checkpoint block '" + b.name +
                                  "': shape/data mismatch");
    const size_t at = payload.size();
    payload.resize(at + 4 * b.data.size());
    std::memcpy(payload.data() + at, b.data.data(), 4 * b.data.size());
  }

  std::string config_text;
  for (const auto& [k, v] : ckpt.config) config_text += k + "=" + v + "\n";

  std::string out = ckpt.magic;
  put_u32(out, ckpt.version);
  put_u32(out, static_cast<uint32_t>(config_text.size()));
  out += config_text;
  out += digest_raw(payload);
  out += payload;
  write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path,
                           const std::string& expected_magic) {
  const std::string bytes = read_file(path);
  size_t at = 0;
  Checkpoint ckpt;
  ckpt.magic = take(bytes, at, 4);
  if (ckpt.magic != expected_magic)
    throw std::runtime_error("checkpoint version error: expected magic '" +
                             expected_magic + "', found '" + ckpt.magic +
                             "' in " + path);
  ckpt.version = get_u32(bytes, at);
  if (ckpt.version != 1)
    throw std::runtime_error("checkpoint version error: unsupported version " +
                             std::to_string(ckpt.version));
  const uint32_t config_len = get_u32(bytes, at);
  const std::string config_text = take(bytes, at, config_len);
  size_t line_start = 0;
  while (line_start < config_text.size()) {
    size_t nl = config_text.find('\n', line_start);
    if (nl == std::string::npos) nl = config_text.size();
    const std::string line = config_text.substr(line_start, nl - line_start);
    line_start = nl + 1;
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("checkpoint: malformed config line '" + line +
                               "'");
    ckpt.config[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::string stored_digest = take(bytes, at, 32);
  const std::string payload = bytes.substr(at);
  if (digest_raw(payload) != stored_digest)
    throw std::runtime_error("checkpoint: payload checksum mismatch in " +
                             path);
  size_t pat = 0;
  const uint32_t block_count = get_u32(payload, pat);
  for (uint32_t i = 0; i < block_count; ++i) {
    CheckpointBlock b;
    const uint32_t name_len = get_u32(payload, pat);
    b.name = take(payload, pat, name_len);
    const uint32_t rank = get_u32(payload, pat);
    size_t n = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      b.shape.push_back(get_u32(payload, pat));
      n *= b.shape.back();
    }
    if (pat + 4 * n > payload.size())
      throw std::runtime_error("checkpoint: truncated block '" + b.name + "'");
    b.data.resize(n);
    std::memcpy(b.data.data(), payload.data() + pat, 4 * n);
    pat += 4 * n;
    ckpt.blocks.push_back(std::move(b));
  }
  return ckpt;
}

void save_embedding_dump(const std::string& path, const EmbeddingDump& dump) {
  std::string out = "SGTE";
  put_u32(out, 1);
  put_u32(out, dump.d);
  put_u32(out, dump.seq_len);
  put_u32(out, static_cast<uint32_t>(dump.floats.size()));
  out.push_back(dump.has_ids ? 1 : 0);
  const size_t expect = static_cast<size_t>(dump.d) * dump.seq_len;
  for (size_t s = 0; s < dump.floats.size(); ++s) {
    if (dump.has_ids) {
      if (dump.ids[s].size() != dump.seq_len)
        throw std::invalid_argument("embedding dump: id length mismatch");
      for (int id : dump.ids[s]) put_u32(out, static_cast<uint32_t>(id));
    }
    if (dump.floats[s].size() != expect)
      throw std::invalid_argument("embedding dump: float length mismatch");
    const size_t at = out.size();
    out.resize(at + 4 * expect);
    std::memcpy(out.data() + at, dump.floats[s].data(), 4 * expect);
  }
  write_file(path, out);
}

EmbeddingDump load_embedding_dump(const std::string& path) {
  const std::string bytes = read_file(path);
  size_t at = 0;
  if (take(bytes, at, 4) != "SGTE")
    throw std::runtime_error("embedding dump: bad magic in " + path);
  const uint32_t version = get_u32(bytes, at);
  if (version != 1)
    throw std::runtime_error("embedding dump: unsupported version");
  EmbeddingDump dump;
  dump.d = get_u32(bytes, at);
  dump.seq_len = get_u32(bytes, at);
  const uint32_t count = get_u32(bytes, at);
  dump.has_ids = take(bytes, at, 1)[0] != 0;
  const size_t n = static_cast<size_t>(dump.d) * dump.seq_len;
  for (uint32_t s = 0; s < count; ++s) {
    if (dump.has_ids) {
      std::vector<int> ids(dump.seq_len);
      for (uint32_t t = 0; t < dump.seq_len; ++t)
        ids[t] = static_cast<int>(get_u32(bytes, at));
      dump.ids.push_back(std::move(ids));
    }
    std::vector<float> f(n);
    const std::string raw = take(bytes, at, 4 * n);
    std::memcpy(f.data(), raw.data(), 4 * n);
    dump.floats.push_back(std::move(f));
  }
  return dump;
}

}  // namespace sgt
