#pragma once
// Deterministic random streams. A master seed fans out into independent
// substreams keyed by a stable label hash, so the draw sequence of one
// subsystem (topology, hop sequence, per-band propagation, per-band MAC,
// app jitter) never shifts when another subsystem changes how much
// randomness it consumes.

#include <cstdint>
#include <string_view>

namespace sixsim {

class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static RngStream derive(std::uint64_t master_seed, std::string_view label) {
    return RngStream(mix64(master_seed ^ fnv1a64(label)));
  }

  // splitmix64: tiny state, passes standard batteries, identical output on
  // every platform (unlike the std:: distributions, which are unspecified).
  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  double uniform() {  // [0, 1), 53 random bits
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_int(std::uint64_t n) {  // [0, n), n > 0
    // Fixed-point scaling via 128-bit multiply; bias < 2^-64 is irrelevant
    // here and the result is platform-independent.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

  std::uint64_t state_ = 0;
};

}  // namespace sixsim
