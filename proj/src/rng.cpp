#include "miab/rng.hpp"

#include <cmath>

namespace miab {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Lemire's multiply-shift; the tiny bias is irrelevant at these ranges.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
}

double Rng::normal() {
  const double u1 = uniform_open0();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::complex<double> Rng::complex_normal() {
  const double u1 = uniform_open0();
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));
  return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
}

}  // namespace miab
