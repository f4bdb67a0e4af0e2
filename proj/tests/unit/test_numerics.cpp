#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "esbmix/numerics.hpp"

using namespace esbmix::numerics;

namespace {

long double brute_rising(long double x, std::size_t m, long double step) {
  long double p = 1.0L;
  for (std::size_t i = 0; i < m; ++i) p *= x + static_cast<long double>(i) * step;
  return p;
}

// E1(x) = int_x^inf e^{-t}/t dt, substituted t = x + s.
double e1_quadrature(double x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([x](double s) { return std::exp(-(x + s)) / (x + s); });
}

// Euler's integral: 2F1(1,1;c;z) = (c-1) int_0^1 (1-t)^{c-2} / (1 - z t) dt, c > 1.
// With x = (1-t)^{c-1} the endpoint singularity for c < 2 disappears:
// 2F1 = int_0^1 dx / (1 - z (1 - x^{1/(c-1)})).
double hyp2f1_euler(double c, double z) {
  auto f = [&](double x) { return 1.0 / (1.0 - z * (1.0 - std::pow(x, 1.0 / (c - 1.0)))); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST_CASE("rising_factorial matches the explicit product") {
  CHECK(rising_factorial(3.0, 0) == 1.0);
  CHECK(rising_factorial(2.5, 4) == doctest::Approx(2.5 * 3.5 * 4.5 * 5.5).epsilon(1e-15));
  CHECK(rising_factorial(1.0, 3, 0.5) == doctest::Approx(1.0 * 1.5 * 2.0).epsilon(1e-15));
  CHECK(rising_factorial(0.5, 2, -0.5) == doctest::Approx(0.0));
  for (double x : {0.3, 1.0, 2.7, 9.5}) {
    for (std::size_t m = 0; m <= 50; m += 7) {
      const long double oracle = brute_rising(x, m, 1.0L);
      CHECK(std::abs(rising_factorial(x, m) / static_cast<double>(oracle) - 1.0) < 1e-10);
      CHECK(std::abs(std::exp(log_rising_factorial(x, m)) / static_cast<double>(oracle) - 1.0) < 1e-10);
    }
  }
  for (double step : {0.0, 0.25, 2.0}) {
    const long double oracle = brute_rising(0.8, 12, step);
    CHECK(std::abs(log_rising_factorial(0.8, 12, step) - std::log(static_cast<double>(oracle))) < 1e-10);
  }
}

TEST_CASE("gauss_2f1_11 against elementary reductions and Euler's integral") {
  SUBCASE("c = 3, z = 1/2 reduces to 4(1 - ln 2)") {
    // 2F1(1,1;3;z) = 2[z + (1-z) ln(1-z)] / z^2 by integrating 2F1(1,1;2;z) = -ln(1-z)/z.
    const double z = 0.5;
    const double reduced = 2.0 * (z + (1.0 - z) * std::log1p(-z)) / (z * z);
    CHECK(std::abs(reduced - 4.0 * (1.0 - std::numbers::ln2)) < 1e-15);
    CHECK(std::abs(gauss_2f1_11(3.0, 0.5) - reduced) < 1e-10);
  }
  SUBCASE("c = 2 is -ln(1-z)/z") {
    for (double z : {-0.5, 0.1, 0.5, 0.9}) CHECK(std::abs(gauss_2f1_11(2.0, z) + std::log1p(-z) / z) < 1e-10);
  }
  SUBCASE("general c by quadrature") {
    for (double c : {1.5, 2.5, 4.0, 11.0, 41.0}) CHECK(std::abs(gauss_2f1_11(c, 0.5) - hyp2f1_euler(c, 0.5)) < 1e-10);
  }
  SUBCASE("partial sums at z = 1/2 increase toward the limit") {
    // Tightening the stopping tolerance can only add positive terms.
    double previous = 0.0;
    for (int digits = 1; digits <= 15; ++digits) {
      const double partial = gauss_2f1_11(2.5, 0.5, {.abs_tol = std::pow(10.0, -digits)});
      CHECK(partial >= previous);
      CHECK(partial <= hyp2f1_euler(2.5, 0.5) + 1e-12);
      previous = partial;
    }
  }
  CHECK_THROWS_AS(gauss_2f1_11(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(gauss_2f1_11(2.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(gauss_2f1_11(2.0, 0.99, {.abs_tol = 1e-300, .max_terms = 5}), ConvergenceError);
}

TEST_CASE("exp_integral_e1") {
  CHECK(std::abs(exp_integral_e1(1.0) - 0.21938393439552) < 1e-12);
  for (double x : {0.01, 0.1, 0.5, 0.999, 1.0, 1.001, 2.0, 5.0, 10.0, 30.0}) {
    const double oracle = e1_quadrature(x);
    CHECK(std::abs(exp_integral_e1(x) - oracle) < 1e-12 * std::max(1.0, oracle) + 1e-15);
  }
  SUBCASE("sandwich bounds") {
    for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double e1 = exp_integral_e1(x);
      CHECK(0.5 * std::exp(-x) * std::log1p(2.0 / x) < e1);
      CHECK(e1 < std::exp(-x) * std::log1p(1.0 / x));
    }
  }
  SUBCASE("decreases monotonically to zero") {
    double previous = exp_integral_e1(0.05);
    for (double x = 0.1; x < 60.0; x *= 1.3) {
      const double e1 = exp_integral_e1(x);
      CHECK(e1 < previous);
      previous = e1;
    }
    CHECK(previous < 1e-25);
  }
  CHECK_THROWS_AS(exp_integral_e1(0.0), std::domain_error);
  CHECK_THROWS_AS(exp_integral_e1(-1.0), std::domain_error);
}

TEST_CASE("Beta helpers") {
  auto gk = [](auto f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
  };
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{2.0, 3.5}, std::pair{1.0, 6.0}}) {
    const double norm = std::exp(log_beta(a, b));
    CHECK(gk([&](double v) { return std::pow(v, a - 1) * std::pow(1 - v, b - 1); }, 0.0, 1.0) ==
          doctest::Approx(norm).epsilon(1e-10));
    for (auto [p, q] : {std::pair{1.0, 0.0}, std::pair{2.0, 3.0}, std::pair{0.0, 4.0}}) {
      const double oracle =
          gk([&](double v) { return std::pow(v, a - 1 + p) * std::pow(1 - v, b - 1 + q); }, 0.0, 1.0) / norm;
      CHECK(std::exp(log_beta_moment(a, b, p, q)) == doctest::Approx(oracle).epsilon(1e-9));
    }
    for (double x : {0.05, 0.3, 0.5, 0.77}) {
      const double oracle = gk([&](double v) { return std::exp(beta_log_pdf(v, a, b)); }, 0.0, x);
      CHECK(beta_cdf(x, a, b) == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(beta_quantile(beta_cdf(x, a, b), a, b) == doctest::Approx(x).epsilon(1e-10));
    }
  }
  CHECK(beta_cdf(0.0, 2.0, 2.0) == 0.0);
  CHECK(beta_cdf(1.0, 2.0, 2.0) == 1.0);
}

TEST_CASE("log_add") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_add(ninf, 0.5) == 0.5);
  CHECK(log_add(0.5, ninf) == 0.5);
  CHECK(log_add(ninf, ninf) == ninf);
  CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  CHECK(log_add(1000.0, 1000.0) == doctest::Approx(1000.0 + std::numbers::ln2));
}

TEST_CASE("SeriesTolerance validation") {
  CHECK_THROWS_AS((SeriesTolerance{.abs_tol = 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((SeriesTolerance{.max_terms = 0}).validate(), std::invalid_argument);
}
