#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace esbmix::numerics {

/// Stopping rule for the power series and continued fractions below.
struct SeriesTolerance {
  double abs_tol = 1e-12;
  int max_terms = 10'000;

  void validate() const;
};

/// Raised when a series or continued fraction does not settle within
/// SeriesTolerance::max_terms.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// prod_{i=0}^{m-1} (x + i * step). Empty product is 1.
double rising_factorial(double x, std::size_t m, double step = 1.0);

/// log of rising_factorial for x > 0 and step >= 0. Uses lgamma when
/// step > 0, so the cost does not grow with m.
double log_rising_factorial(double x, std::size_t m, double step = 1.0);

/// Gauss hypergeometric 2F1(1, 1; c; z) by direct summation of
/// sum_n n! z^n / (c)_n. Requires c > 0 and |z| < 1.
double gauss_2f1_11(double c, double z, SeriesTolerance tol = {});

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt for x > 0.
/// Power series below x = 1, modified Lentz continued fraction above.
double exp_integral_e1(double x, SeriesTolerance tol = {});

double log_beta(double a, double b);

/// E[v^p (1-v)^q] for v ~ Be(a, b), in log space.
double log_beta_moment(double a, double b, double p, double q);

double beta_log_pdf(double x, double a, double b);
double beta_cdf(double x, double a, double b);
double beta_quantile(double p, double a, double b);

/// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add(double a, double b);

}  // namespace esbmix::numerics
