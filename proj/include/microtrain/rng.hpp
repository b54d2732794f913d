#pragma once

#include <cstdint>
#include <random>
#include <string>

// Deterministic randomness.
//
// Every run owns a single 64-bit root seed. Each consumer (init, sampler,
// label noise, per-split data generation, ...) derives its own independent
// stream with derive_seed(root, "name"), so adding or reordering consumers
// cannot perturb the draws of another stream.
//
// Pinned algorithms (identical output on every platform/compiler):
//   - stream derivation: FNV-1a 64 over the stream name, mixed with the
//     root seed through splitmix64
//   - engine: std::mt19937_64 (bit-exact per the C++ standard)
//   - u01: 53-bit mantissa trick, (x >> 11) * 2^-53, in [0, 1)
//   - normal: Box-Muller on u01 pairs (std::normal_distribution is
//     implementation-defined, so it is not used)

namespace microtrain {

uint64_t splitmix64(uint64_t& state);
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);

uint64_t derive_seed(uint64_t root_seed, const std::string& stream_name);

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  Rng(uint64_t root_seed, const std::string& stream_name)
      : eng_(derive_seed(root_seed, stream_name)) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1), 53 random bits.
  double u01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  /// Standard normal via Box-Muller; caches the second deviate.
  double normal();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace microtrain
