#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace fracising {

using Real = double;
using Index = Eigen::Index;

using ArrayXr = Eigen::ArrayX<Real>;
using ArrayXXr = Eigen::ArrayXX<Real>;
using VectorXr = Eigen::VectorX<Real>;
using MatrixXr = Eigen::MatrixX<Real>;

// Spins are stored as +-1 in a signed byte array.
using SpinArray = Eigen::ArrayX<std::int8_t>;

using Rng = std::mt19937_64;

inline constexpr const char* kRngAlgorithm =
    "mt19937_64 (seeded via splitmix64; uniforms via 53-bit shift)";

// splitmix64 step, used to decorrelate seeds derived from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed for sub-run `index` of a campaign keyed by `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(0x517cc1b727220a95ULL + index));
}

// Uniform in [0, 1) with exactly 53 random bits. Fixed mapping so runs
// reproduce byte for byte across standard libraries.
inline Real uniform01(Rng& rng) {
  return static_cast<Real>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection, again for cross-platform stability.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % n;
}

// Standard normal via Box-Muller, one branch only, two draws per value;
// fixed sequence independent of the standard library's distributions.
inline Real normal01(Rng& rng) {
  Real u = uniform01(rng);
  while (u == 0.0) u = uniform01(rng);
  const Real v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.28318530717958647692 * v);
}

}  // namespace fracising
