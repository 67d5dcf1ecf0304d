#ifndef NEPPO_RNG_HPP
#define NEPPO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace neppo {

/// Independent random streams used by the library. Each stream is keyed by
/// (seed, purpose, iteration) so results never depend on evaluation order.
enum class StreamPurpose : std::uint64_t {
  Direction = 1,
  EvalHat = 2,
  EvalCheck = 3,
  SolverHat = 4,
  SolverCheck = 5,
  Baseline = 6,
  Evaluation = 7,
  Test = 99,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based generator: the k-th output is a bijective mix of key + k.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t iteration) noexcept
      : key_(detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^
                                                   static_cast<std::uint64_t>(purpose)) ^
                                iteration)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return detail::splitmix64(key_ + 0x632BE59BD9B4E019ULL * counter_++);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate is discarded so the
  /// stream position depends only on the number of draws.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derives a child stream; used to hand each task its own generator.
  CounterRng split(std::uint64_t tag) const noexcept {
    return CounterRng(detail::splitmix64(key_ ^ detail::splitmix64(tag + 0xA5A5A5A5ULL)));
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace neppo

#endif  // NEPPO_RNG_HPP
