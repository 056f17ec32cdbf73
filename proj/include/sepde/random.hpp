#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace sepde {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Engine for stream `stream` of a seeded family; streams are independent
/// of how many other streams are drawn.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

/// Node-wise standard normal vector from one stream.
inline Eigen::VectorXd random_normal(Eigen::Index n, std::uint64_t seed, std::uint64_t stream) {
  auto rng = stream_engine(seed, stream);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = normal(rng);
  return v;
}

}  // namespace sepde
