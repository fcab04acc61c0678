#pragma once

// Counter-based random number generation. Every consumer of randomness in
// this project takes an explicit RngStream; there is no global RNG state.
// Streams are keyed by (seed, stream_id): equal keys replay the exact same
// draw sequence, distinct stream_ids give statistically independent streams.
//
// Generator: Philox4x32-10 (Salmon et al. counter-based PRNG) with the
// 128-bit counter split as [draw index | stream_id] and the 64-bit seed as
// the key. Normal variates come from Box-Muller on 53-bit uniforms, so the
// draw sequence is a pure function of the key and bit-reproducible across
// platforms.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

namespace sgt {

namespace detail {

struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(uint64_t seed, uint64_t stream_id,
                                       uint64_t counter) {
    std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(counter), static_cast<uint32_t>(counter >> 32),
        static_cast<uint32_t>(stream_id),
        static_cast<uint32_t>(stream_id >> 32)};
    uint32_t k0 = static_cast<uint32_t>(seed);
    uint32_t k1 = static_cast<uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
      const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
      const std::array<uint32_t, 4> next = {
          static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
          static_cast<uint32_t>(p1),
          static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
          static_cast<uint32_t>(p0)};
      ctr = next;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

class RngStream {
 public:
  static constexpr std::string_view kAlgorithmTag = "philox4x32-10/box-muller";

  RngStream(uint64_t seed, uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  // Derived stream for parallel or logically separate consumers. Children of
  // distinct (stream, key) pairs land on distinct stream_ids.
  RngStream child(uint64_t key) const {
    return RngStream(seed_, detail::splitmix64(stream_id_ ^
                                               detail::splitmix64(key + 1)));
  }

  uint32_t next_u32() {
    if (buf_pos_ == 4) {
      buf_ = detail::Philox4x32::block(seed_, stream_id_, counter_++);
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Lemire's method with rejection, exact.
  uint64_t uniform_index(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
    while (true) {
      const uint64_t x = next_u64();
      const __uint128_t m = static_cast<__uint128_t>(x) * n;
      const uint64_t lo = static_cast<uint64_t>(m);
      if (lo >= n || lo >= (0 - n) % n) return static_cast<uint64_t>(m >> 64);
    }
  }

  // Standard normal via Box-Muller; pairs are generated together and the
  // second one cached, so draw order is fixed.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t seed_;
  uint64_t stream_id_;
  uint64_t counter_ = 0;
  std::array<uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// i.i.d. N(0,1) samples in row-major fill order, deterministic given the
// stream state.
template <typename Scalar = float>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gaussian_draw(
    RngStream& stream, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("gaussian_draw: shape must be nonempty");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = static_cast<Scalar>(stream.normal());
  return out;
}

}  // namespace sgt
