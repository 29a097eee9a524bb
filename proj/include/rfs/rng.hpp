#pragma once

#include <array>
#include <cstdint>

namespace rfs {

// Counter-based Philox4x32-10 generator (Salmon et al., SC'11).
//
// Each stream is fully determined by its 64-bit seed, so trajectories can be
// assigned seeds up front and produce identical numbers no matter which worker
// thread runs them or in what order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // Spread the seed over the key with splitmix64 so that nearby seeds
    // (base_seed + m) give unrelated keys.
    std::uint64_t k = splitmix64(seed);
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
    counter_ = {0, 0, 0, 0};
    buffer_pos_ = 4;
  }

  // Uniform double strictly inside (0, 1).
  double uniform01() {
    std::uint64_t bits =
        (static_cast<std::uint64_t>(next_u32()) << 32) | next_u32();
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t next_u64() {
    return (static_cast<std::uint64_t>(next_u32()) << 32) | next_u32();
  }

  std::uint32_t next_u32() {
    if (buffer_pos_ >= 4) {
      buffer_ = block(counter_, key_);
      increment_counter();
      buffer_pos_ = 0;
    }
    return buffer_[buffer_pos_++];
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

  void increment_counter() {
    for (int i = 0; i < 4; ++i) {
      if (++counter_[i] != 0) break;
    }
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_;
};

}  // namespace rfs
