#pragma once

#include <cstdint>
#include <limits>

namespace treecal {

/// xoshiro256** seeded through SplitMix64.
///
/// All distributions are implemented here rather than through <random> so that
/// streams are identical across standard library implementations. Independent
/// streams are derived with child(id): the child seed depends only on this
/// generator's construction seed and the id, never on how many draws were made.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  Rng child(std::uint64_t stream_id) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double normal();
  double exponential();
  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

/// Stream ids used when splitting a run's generator.
namespace streams {
inline constexpr std::uint64_t kAdversary = 1;
inline constexpr std::uint64_t kSampler = 2;
inline constexpr std::uint64_t kRun = 3;
}  // namespace streams

}  // namespace treecal
