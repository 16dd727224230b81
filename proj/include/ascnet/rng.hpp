#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ascnet {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seeded generator with named child streams.
///
/// A child stream depends only on the parent seed and the stream name, so the
/// draws made in one stream never shift another. Training uses the streams
/// "init" (parameter initialization), "shuffle" (per-epoch order) and
/// "dropout" (per-step masks), derived from the run seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng stream(std::string_view name) const { return Rng(splitmix64(seed_ ^ fnv1a64(name))); }

  std::mt19937_64& engine() { return engine_; }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  double normal(double mean = 0.0, double sigma = 1.0) {
    return std::normal_distribution<double>(mean, sigma)(engine_);
  }

  /// True with probability p.
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ascnet
