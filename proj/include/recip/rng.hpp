#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace recip {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic generator. Named child streams are derived from the master
// seed by hashing, so adding a component never perturbs the others.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  Rng stream(std::string_view name) const {
    return Rng(splitmix64(seed_ ^ fnv1a(name)));
  }
  Rng stream(std::string_view name, std::uint64_t index) const {
    return Rng(splitmix64(splitmix64(seed_ ^ fnv1a(name)) + index));
  }

  std::uint64_t seed() const { return seed_; }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int below(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(engine_()) * static_cast<unsigned>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace recip
