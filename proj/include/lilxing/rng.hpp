#pragma once

#include <cstdint>
#include <random>

namespace lilxing {

/// SplitMix64 finaliser; used to derive independent seeds and counter-based
/// uniforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Identifies one replicate's random stream: (master seed, experiment stream,
/// replicate index). Streams never depend on how replicates are scheduled.
struct SeedRecord {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
  std::uint64_t index = 0;

  constexpr std::uint64_t key() const {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
  }
};

/// Uniform on (0,1) attached to (key, cell), independent of the engine state.
/// Bridge-crossing tests draw from here so that a cell's uniform is the same
/// whatever the boundary, giving common random numbers across levels.
inline double cell_uniform(std::uint64_t key, std::uint64_t cell) {
  const std::uint64_t bits = splitmix64(key ^ splitmix64(cell + 0x632be59bd9b4e019ULL));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Per-replicate generator: a Mersenne twister seeded from the stream key.
class PathRng {
 public:
  explicit PathRng(const SeedRecord& seed) : seed_(seed), engine_(seed.key()) {}

  const SeedRecord& seed() const { return seed_; }
  double gaussian() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double cell_uniform(std::uint64_t cell) const { return lilxing::cell_uniform(seed_.key(), cell); }

 private:
  SeedRecord seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace lilxing
