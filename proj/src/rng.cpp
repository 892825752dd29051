#include "tdoa/rng.hpp"

#include <cmath>

namespace tdoa {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t state = seed;
  std::uint64_t out = splitmix64(state);
  state ^= a + 0x632be59bd9b4e019ULL;
  out ^= splitmix64(state);
  state ^= b + 0x9e3779b97f4a7c15ULL;
  out ^= splitmix64(state);
  state ^= c + 0xd1b54a32d192ed03ULL;
  out ^= splitmix64(state);
  return out;
}

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                               std::uint64_t c) {
  return RngStream(mix_seed(seed, a, b, c));
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

}  // namespace tdoa
