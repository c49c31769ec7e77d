#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace pbrwp {

// SplitMix64 step; used to whiten substream keys before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent random stream from (master seed, key triple).
// Consumers never share a stream: each one is keyed by its own indices,
// which makes results independent of scheduling order.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL;
  h ^= splitmix64(s);
  s ^= b * 0x8CB92BA72F3D8DD7ULL + 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64(s);
  s ^= c * 0xE7037ED1A0B428DBULL + 0x589965CC75374CC3ULL;
  h ^= splitmix64(s);
  return std::mt19937_64(h);
}

inline Eigen::VectorXd standard_normal_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace pbrwp
