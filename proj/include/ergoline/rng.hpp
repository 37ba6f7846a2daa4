#pragma once

#include <array>
#include <cstdint>

namespace ergoline {

/// Philox4x64-10 counter-based block cipher. A (counter, key) pair maps to
/// four statistically independent 64-bit words, so streams can be indexed
/// by (master seed, path) and consumed in any parallel schedule with
/// bit-identical results.
struct Philox4x64 {
  static std::array<std::uint64_t, 4> block(
      const std::array<std::uint64_t, 4>& counter,
      const std::array<std::uint64_t, 2>& key) noexcept;
};

/// Deterministic per-path random stream: key = (master_seed, path_index),
/// counter increments per generated block.
class PathRng {
 public:
  PathRng(std::uint64_t master_seed, std::uint64_t path_index) noexcept
      : key_{master_seed, path_index} {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; generates pairs and caches the spare.
  double gauss() noexcept;

  /// Exponential with the given rate (inverse-CDF of a single uniform).
  double exponential(double rate) noexcept;

  /// Poisson count by summing unit-exponential arrivals; exact for any
  /// finite mean, cost O(mean + 1) draws.
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buffer_{};
  unsigned buffer_pos_ = 4;  // empty
  double spare_gauss_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ergoline
