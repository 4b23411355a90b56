#pragma once

#include <cstdint>
#include <random>

namespace epi {

/// SplitMix64 finalizer. Used to derive independent seeds from (seed, stream).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable, splittable random stream.
///
/// Each stream wraps its own engine; `split(k)` yields a child stream whose
/// seed depends only on this stream's seed and `k`, so sub-streams handed to
/// parallel work are reproducible regardless of scheduling order.
class Rng {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const {
    return Rng(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ULL)));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  engine_type& engine() noexcept { return engine_; }

  // UniformRandomBitGenerator, so std distributions accept an Rng directly.
  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace epi
