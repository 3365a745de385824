#pragma once

#include <cstdint>
#include <string_view>

namespace bpi {

/// Counter-based 64-bit generator.
///
/// Output i of a stream keyed by `key` is `mix64(key + (i + 1) * 0x9E3779B97F4A7C15)`
/// where `mix64` is the SplitMix64 finalizer (Stafford variant 13). Only
/// integer arithmetic is involved, so the raw stream is bit-identical on every
/// platform; `uniform()` takes the top 53 bits.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64() noexcept;
  std::uint64_t operator()() noexcept { return next_u64(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on (0, 1), never zero.
  double uniform_pos() noexcept;
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() noexcept;
  /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  /// Beta(a, b) as a ratio of gamma variates.
  double beta(double a, double b) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Per-purpose seed: hashes (seed, tag, index) so distinct purposes and
/// trials get unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index = 0) noexcept;

}  // namespace bpi
