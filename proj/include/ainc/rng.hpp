#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ainc/common.hpp"

namespace ainc {

// splitmix64 finalizer; used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t k = 0) {
  return splitmix64(seed ^ splitmix64(tag ^ splitmix64(k)));
}

// Sub-stream tags (arbitrary distinct constants).
namespace seed_tag {
inline constexpr std::uint64_t init = 0x494e4954;      // parameter init
inline constexpr std::uint64_t shuffle = 0x53485546;   // epoch permutation
inline constexpr std::uint64_t augment = 0x4155474d;   // view augmentation
inline constexpr std::uint64_t attack = 0x4154544b;    // PGD random starts
inline constexpr std::uint64_t classifier = 0x434c4649;
inline constexpr std::uint64_t eval = 0x4556414c;
inline constexpr std::uint64_t data_train = 0x44545241;
inline constexpr std::uint64_t data_test = 0x44544553;
}  // namespace seed_tag

// Deterministic RNG: mt19937_64 (bit-portable per the standard) with
// hand-rolled output transforms, so sampled streams do not depend on the
// standard library's distribution implementations. Box-Muller draws a fresh
// pair of uniforms per normal (no caching) to keep stream accounting trivial.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  // (0, 1]
  double uniform_pos() { return static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n); multiply-shift (bias < 2^-64, irrelevant here).
  std::uint64_t below(std::uint64_t n) {
    check(n > 0, "Rng::below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

// Fisher-Yates; identical results for identical (contents, rng state).
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ainc
