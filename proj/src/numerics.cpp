#include "esbmix/numerics.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <fmt/core.h>
#include <limits>

namespace esbmix::numerics {

namespace {
constexpr double kEulerGamma = 0.57721566490153286060651209;
}

void SeriesTolerance::validate() const {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("SeriesTolerance: abs_tol must be > 0");
  if (max_terms < 1) throw std::invalid_argument("SeriesTolerance: max_terms must be >= 1");
}

double rising_factorial(double x, std::size_t m, double step) {
  double out = 1.0;
  for (std::size_t i = 0; i < m; ++i) out *= x + static_cast<double>(i) * step;
  return out;
}

double log_rising_factorial(double x, std::size_t m, double step) {
  if (!(x > 0.0) || step < 0.0) {
    throw std::domain_error(
        fmt::format("log_rising_factorial: need x > 0 and step >= 0 (x={}, step={})", x, step));
  }
  if (m == 0) return 0.0;
  if (step == 0.0) return static_cast<double>(m) * std::log(x);
  // (x)_{m, step} = step^m * Gamma(x/step + m) / Gamma(x/step)
  const double r = x / step;
  if (m < 16) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::log(x + static_cast<double>(i) * step);
    return acc;
  }
  return static_cast<double>(m) * std::log(step) + std::lgamma(r + static_cast<double>(m)) -
         std::lgamma(r);
}

double gauss_2f1_11(double c, double z, SeriesTolerance tol) {
  tol.validate();
  if (!(c > 0.0)) throw std::domain_error(fmt::format("gauss_2f1_11: c must be > 0, got {}", c));
  if (!(std::abs(z) < 1.0)) {
    throw std::domain_error(fmt::format("gauss_2f1_11: |z| must be < 1, got {}", z));
  }
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < tol.max_terms; ++n) {
    term *= (static_cast<double>(n) + 1.0) / (c + static_cast<double>(n)) * z;
    sum += term;
    if (std::abs(term) < tol.abs_tol) return sum;
  }
  throw ConvergenceError(
      fmt::format("gauss_2f1_11: no convergence after {} terms (c={}, z={})", tol.max_terms, c, z));
}

double exp_integral_e1(double x, SeriesTolerance tol) {
  tol.validate();
  if (!(x > 0.0)) throw std::domain_error(fmt::format("exp_integral_e1: x must be > 0, got {}", x));
  if (x < 1.0) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double fact_term = 1.0;  // (-x)^k / k!
    for (int k = 1; k <= tol.max_terms; ++k) {
      fact_term *= -x / static_cast<double>(k);
      const double term = fact_term / static_cast<double>(k);
      sum += term;
      if (std::abs(term) < tol.abs_tol * std::abs(sum)) {
        return -kEulerGamma - std::log(x) - sum;
      }
    }
    throw ConvergenceError(fmt::format("exp_integral_e1: series did not converge at x={}", x));
  }
  // Continued fraction e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))), modified Lentz.
  constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= tol.max_terms; ++i) {
    const double an = -static_cast<double>(i) * static_cast<double>(i);
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < tol.abs_tol) return h * std::exp(-x);
  }
  throw ConvergenceError(fmt::format("exp_integral_e1: continued fraction did not converge at x={}", x));
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_beta_moment(double a, double b, double p, double q) {
  return log_beta(a + p, b + q) - log_beta(a, b);
}

double beta_log_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) {
    if ((x == 0.0 && a == 1.0) || (x == 1.0 && b == 1.0)) return -log_beta(a, b);
    return -std::numeric_limits<double>::infinity();
  }
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b);
}

double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (a == 1.0) return -std::expm1(b * std::log1p(-x));
  return boost::math::ibeta(a, b, x);
}

double beta_quantile(double p, double a, double b) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  if (a == 1.0) return -std::expm1(std::log1p(-p) / b);
  return boost::math::ibeta_inv(a, b, p);
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace esbmix::numerics
