#pragma once

#include <cstdint>
#include <random>

namespace mtjsnn {

/// SplitMix64 finalizer. Used to derive well-separated seeds for
/// independent random streams from a (seed, stream) pair.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine_stream(std::uint64_t seed,
                                       std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Stream id for work item `index` inside group `group` (e.g. sweep cell,
/// trial). Independent of scheduling order.
constexpr std::uint64_t stream_id(std::uint64_t group, std::uint64_t index) {
  return splitmix64(group * 0x100000001b3ULL + splitmix64(index));
}

/// Seeded generator owning one independent stream. Gaussian and uniform
/// draws are implemented here, not via std:: distributions, so that
/// sequences are identical across standard library implementations.
class Rng {
public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream)
      : engine_(combine_stream(seed, stream)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Integer uniform in [lo, hi] (inclusive). Uses rejection to stay exact.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via the Marsaglia polar method (pairs cached).
  double gaussian();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace mtjsnn
