#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgt {

// Hex-encoded SHA-256.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// First 8 bytes of the digest as an integer, for seeding derived RNG streams.
uint64_t hash64(const std::string& data);

}  // namespace sgt
