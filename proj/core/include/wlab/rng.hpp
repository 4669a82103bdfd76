#pragma once

#include <cmath>
#include <cstdint>

namespace wlab {

// Counter-based stream RNG (Philox4x32-10).  A stream is addressed by
// (seed, stream_id); identical addresses reproduce identical draws and
// distinct stream_ids are statistically independent, so path-level
// parallelism can hand stream k to path k regardless of thread layout.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(static_cast<std::uint32_t>(stream_id)),
        ctr3_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint64_t seed() const {
    return key0_ | (static_cast<std::uint64_t>(key1_) << 32);
  }
  std::uint64_t stream_id() const {
    return ctr2_ | (static_cast<std::uint64_t>(ctr3_) << 32);
  }

  std::uint64_t next_u64() {
    if (block_pos_ >= 4) refill();
    const std::uint64_t lo = block_[block_pos_];
    const std::uint64_t hi = block_[block_pos_ + 1];
    block_pos_ += 2;
    return lo | (hi << 32);
  }

  // Uniform on (0,1), never returning an endpoint.
  double uniform01() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via Box-Muller; draws are paired and cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // One raw Philox block for known-answer tests.
  static void philox4x32_10(const std::uint32_t ctr_in[4],
                            const std::uint32_t key_in[2],
                            std::uint32_t out[4]) {
    std::uint32_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
    std::uint32_t k0 = key_in[0], k1 = key_in[1];
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

 private:
  void refill() {
    const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(counter_),
                                  static_cast<std::uint32_t>(counter_ >> 32),
                                  ctr2_, ctr3_};
    const std::uint32_t key[2] = {key0_, key1_};
    philox4x32_10(ctr, key, block_);
    ++counter_;
    block_pos_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t ctr2_, ctr3_;
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int block_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Stream id layout: one path owns a small family of substreams so that the
// Wiener increments, the signal parameter, the particle cloud and the
// resampler never share draws.
enum class StreamPurpose : std::uint64_t {
  kWiener = 0,
  kParameter = 1,
  kParticles = 2,
  kResample = 3,
};

inline std::uint64_t path_stream_id(std::uint64_t path_index, StreamPurpose p) {
  return (path_index << 3) | static_cast<std::uint64_t>(p);
}

}  // namespace wlab
