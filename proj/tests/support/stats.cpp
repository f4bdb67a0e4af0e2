#include "support/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace esbmix::testing {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::std_error() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

double z_score(double estimate, double truth, double se) {
  const double diff = std::abs(estimate - truth);
  if (se == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / se;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double batch_means_se(std::span<const double> series, std::size_t batches) {
  const std::size_t size = series.size() / batches;
  if (size == 0) throw std::invalid_argument("batch_means_se: too few observations");
  RunningStats means;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * size);
    means.add(std::accumulate(first, first + static_cast<std::ptrdiff_t>(size), 0.0) / static_cast<double>(size));
  }
  return means.std_error();
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) total += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return total;
}

std::vector<std::size_t> polya_urn_path(double theta, std::size_t n, Rng& rng) {
  std::vector<std::size_t> path;
  path.reserve(n);
  std::size_t tables = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Customer i + 1 opens a table with probability theta / (theta + i).
    if (rng.uniform() * (theta + static_cast<double>(i)) < theta) ++tables;
    path.push_back(tables);
  }
  return path;
}

double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rand_index: size mismatch");
  std::size_t agree = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      agree += (a[i] == a[j]) == (b[i] == b[j]) ? 1 : 0;
      ++pairs;
    }
  }
  return pairs == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(pairs);
}

std::map<std::size_t, double> empirical_pmf(std::span<const std::size_t> values) {
  std::map<std::size_t, double> pmf;
  for (auto v : values) pmf[v] += 1.0;
  for (auto& [k, p] : pmf) p /= static_cast<double>(values.size());
  return pmf;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Estimate correlation_with_se(std::span<const double> x, std::span<const double> y, std::size_t batches) {
  const std::size_t size = x.size() / batches;
  if (size < 2) throw std::invalid_argument("correlation_with_se: too few observations");
  RunningStats per_batch;
  for (std::size_t b = 0; b < batches; ++b) {
    per_batch.add(pearson_correlation(x.subspan(b * size, size), y.subspan(b * size, size)));
  }
  return {pearson_correlation(x, y), per_batch.std_error()};
}

}  // namespace esbmix::testing
