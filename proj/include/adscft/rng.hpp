#pragma once

// Counter-keyed random streams: stream (seed, key) is a pure function of its
// two integers, so parallel samplers reproduce bit-for-bit for any schedule.

#include <cstdint>
#include <limits>
#include <random>

namespace adscft {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// SplitMix64 as a UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  SplitMix64(std::uint64_t seed, std::uint64_t key) : state_(mix64(mix64(seed) ^ key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Standard normal draws from stream (seed, key).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t key) : engine_(seed, key) {}
  double operator()() { return dist_(engine_); }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace adscft
