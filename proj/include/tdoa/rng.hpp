#pragma once

#include <cstdint>
#include <random>

namespace tdoa {

/// Seeded random stream with explicitly coded transforms so that sequences
/// are reproducible for a given seed. Substreams derived from (seed, a, b, c)
/// are used for scheduling-independent parallel draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the second deviate is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double mu, double s) { return std::exp(mu + s * normal()); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// SplitMix64 step; used to whiten seed material.
std::uint64_t splitmix64(std::uint64_t& state);

/// Collapses several integers into one well-mixed seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace tdoa
