#pragma once

#include <complex>
#include <cstdint>
#include <limits>

namespace miab {

// Stateless mixing step of splitmix64.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a + 0x9E3779B97F4A7C15ULL + mix64(b));
}

// Counter-based stream: every draw depends only on (key, counter), so
// independent streams can be consumed in any order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(mix64(key)) {}
  Rng(std::uint64_t seed, std::uint64_t tag) : key_(hash_combine(seed, tag)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next() { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  // Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Uniform in (0, 1].
  double uniform_open0() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Circularly symmetric complex Gaussian with unit variance.
  std::complex<double> complex_normal();

  Rng fork(std::uint64_t tag) const { return Rng(key_, tag); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_{0};
};

namespace stream {
inline constexpr std::uint64_t kLayout = 0x6C61796F7574ULL;
inline constexpr std::uint64_t kMobility = 0x6D6F62696CULL;
inline constexpr std::uint64_t kTraffic = 0x74726166ULL;
inline constexpr std::uint64_t kLargeScale = 0x6C61726765ULL;
inline constexpr std::uint64_t kFading = 0x66616465ULL;
inline constexpr std::uint64_t kLink = 0x6C696E6BULL;
inline constexpr std::uint64_t kBackhaul = 0x6268ULL;
}  // namespace stream

}  // namespace miab
