#include "esbmix/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace esbmix {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5bd1e995ULL)));
}

double Rng::uniform() {
  // 53 random bits, shifted by half an ulp so that 0 is excluded.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double x, y, s;
  do {
    x = 2.0 * uniform() - 1.0;
    y = 2.0 * uniform() - 1.0;
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = y * f;
  has_spare_normal_ = true;
  return x * f;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::domain_error("Rng::gamma: shape must be > 0");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::exp(std::log(uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  const double s = x + y;
  if (s == 0.0) return uniform() < a / (a + b) ? 1.0 : 0.0;
  return x / s;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) hi = std::max(hi, lw);
  if (hi == -std::numeric_limits<double>::infinity()) return log_weights.size();
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - hi);
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = log_weights.size();
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == -std::numeric_limits<double>::infinity()) continue;
    acc += std::exp(log_weights[i] - hi);
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform_index: n must be > 0");
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

}  // namespace esbmix
