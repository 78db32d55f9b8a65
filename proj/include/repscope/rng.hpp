#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace repscope {

/// One SplitMix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Child seed for an independent stream. Pure function of (seed, stream), so
/// work items seeded this way produce the same values in any execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Deterministic generator. The engine is mt19937_64, whose output sequence is
/// fixed by the standard; the conversions below avoid the implementation-defined
/// std:: distributions so integer and uniform draws match on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Always consumes exactly one draw.
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal (Box-Muller, caches the second variate).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace repscope
