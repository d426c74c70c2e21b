#pragma once

#include <cstdint>
#include <random>

namespace bhvqe {

// Deterministic RNG used everywhere randomness is needed. Seeds for derived
// streams are mixed from the base seed so that stream k is reproducible from
// (seed, k) alone, independent of draw order on other streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  // Independent child stream, reproducible from the base seed and the index.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  // Binomial(n, p) draw.
  std::int64_t binomial(std::int64_t n, double p) {
    if (n <= 0) return 0;
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(engine_);
  }

 private:
  // splitmix64 finalizer; spreads nearby seeds across the whole state space.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bhvqe
