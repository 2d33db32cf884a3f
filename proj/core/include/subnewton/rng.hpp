#pragma once

#include <cstdint>
#include <vector>

namespace subnewton {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based generator. Draw k (k = 1, 2, ...) is
///   mix64(mix64(seed) + k * 0x9E3779B97F4A7C15)
/// so the stream is a pure function of (seed, k) and identical on every
/// platform. Doubles use the top 53 bits; normals use Box-Muller.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept;
  /// Uniform on [0, n) for n >= 1.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  double normal() noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::int64_t> random_permutation(std::int64_t n, CounterRng& rng);

}  // namespace subnewton
