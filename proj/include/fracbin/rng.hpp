#pragma once

#include <cstdint>

namespace fracbin {

/// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Identifies one path of one experiment.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// Counter-based sign stream: bit k of block b is a pure function of
/// (master_seed, path_index, b), so any sign can be produced without state and
/// every worker reproduces the same path for the same SeedSpec.
class SignStream {
 public:
  explicit constexpr SignStream(SeedSpec seed) noexcept
      : key_(mix64(mix64(seed.master_seed ^ 0x6a09e667f3bcc909ULL) + kGolden * (seed.path_index + 1))) {}

  constexpr std::uint64_t block(std::uint64_t b) const noexcept { return mix64(key_ + kGolden * (b + 1)); }

  /// Sign number k (0-based): +1 if the bit is set, -1 otherwise.
  constexpr int sign(std::uint64_t k) const noexcept { return ((block(k / 64) >> (k % 64)) & 1u) ? 1 : -1; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
};

}  // namespace fracbin
