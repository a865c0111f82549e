#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace verbscope {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Derives the seed of an independent stream for item `index` under `seed`.
// The result depends only on (seed, index), never on scheduling.
constexpr std::uint64_t mix64(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64_finalize(seed ^ splitmix64_finalize(index * kGolden + kGolden));
}

// SplitMix64 generator. Every random decision in the toolkit goes through
// this type so results are identical across platforms and standard
// libraries (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGolden;
    return splitmix64_finalize(state_);
  }

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Fisher-Yates, walking i from n-1 down to 1 and swapping with below(i+1).
  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

inline Rng stream_for(std::uint64_t seed, std::uint64_t index) noexcept {
  return Rng(mix64(seed, index));
}

}  // namespace verbscope
