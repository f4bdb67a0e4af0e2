#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace esbmix {

/// Seeded random source. Every variate is derived from the 64-bit
/// Mersenne Twister through constructions pinned in this file, so a seed
/// reproduces the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for worker/chain `stream` of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, 1) by Marsaglia-Tsang with squeeze; shape < 1 boosted
  /// through U^{1/shape}.
  double gamma(double shape);
  double gamma(double shape, double rate) { return gamma(shape) / rate; }
  double beta(double a, double b);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// Index drawn proportionally to nonnegative `weights` (not necessarily
  /// normalized). Returns weights.size() if they are all zero.
  std::size_t categorical(std::span<const double> weights);

  /// Same, for log-weights; -inf entries are never selected.
  std::size_t categorical_log(std::span<const double> log_weights);

  std::size_t uniform_index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace esbmix
