#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "esbmix/eppf.hpp"
#include "esbmix/partitions.hpp"
#include "esbmix/random.hpp"
#include "support/stats.hpp"

using namespace esbmix;
using Sizes = std::vector<std::size_t>;

namespace {

constexpr double kE1At1 = 0.21938393439552027368;

// prod_{i=1}^{k-1}(beta + i alpha) prod_j (1-alpha)_{n_j - 1} / (beta + 1)_{n-1}, term by term.
long double py_direct(long double alpha, long double beta, const Sizes& sizes) {
  long double num = 1.0L;
  for (std::size_t i = 1; i < sizes.size(); ++i) num *= beta + static_cast<long double>(i) * alpha;
  for (std::size_t s : sizes) {
    for (std::size_t l = 1; l < s; ++l) num *= static_cast<long double>(l) - alpha;
  }
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  long double den = 1.0L;
  for (std::size_t l = 1; l < n; ++l) den *= beta + static_cast<long double>(l);
  return num / den;
}

Sizes random_composition(std::size_t max_total, Rng& rng) {
  const std::size_t total = 1 + rng.uniform_index(max_total);
  Sizes sizes;
  std::size_t left = total;
  while (left > 0) {
    const std::size_t s = 1 + rng.uniform_index(left);
    sizes.push_back(s);
    left -= s;
  }
  return sizes;
}

}  // namespace

TEST_CASE("log_eppf reference values") {
  CHECK(log_eppf(EppfModel::dirichlet(1.0), Sizes{2}) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(log_eppf(EppfModel::dirichlet(2.0), Sizes{1, 1}) == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-14));
  for (auto model : {EppfModel::dirichlet(0.7), EppfModel::pitman_yor(0.3, 2.0), EppfModel::iid(),
                     EppfModel::identical()}) {
    CHECK(eppf(model, Sizes{1}) == 1.0);
  }
  CHECK(eppf(EppfModel::iid(), Sizes{1, 1, 1}) == 1.0);
  CHECK(log_eppf(EppfModel::iid(), Sizes{2, 1}) == -INFINITY);
  CHECK(eppf(EppfModel::identical(), Sizes{4}) == 1.0);
  CHECK(log_eppf(EppfModel::identical(), Sizes{3, 1}) == -INFINITY);
  CHECK_THROWS_AS(log_eppf(EppfModel::dirichlet(1.0), Sizes{}), std::invalid_argument);
  CHECK_THROWS_AS(log_eppf(EppfModel::dirichlet(1.0), Sizes{2, 0}), std::invalid_argument);
}

TEST_CASE("Pitman-Yor against the term-by-term product") {
  Rng rng(11);
  for (auto [a, b] : {std::pair{0.25, 0.5}, std::pair{0.5, 1.0}, std::pair{0.5, -0.3}, std::pair{0.9, 7.0}}) {
    for (int rep = 0; rep < 100; ++rep) {
      const Sizes sizes = random_composition(12, rng);
      const double oracle = static_cast<double>(py_direct(a, b, sizes));
      CHECK(eppf(EppfModel::pitman_yor(a, b), sizes) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("Pitman-Yor with alpha = 0 is the Dirichlet law") {
  Rng rng(12);
  for (double beta : {0.1, 1.0, 4.5}) {
    for (int rep = 0; rep < 50; ++rep) {
      const Sizes sizes = random_composition(10, rng);
      CHECK(log_eppf(EppfModel::pitman_yor(0.0, beta), sizes) == log_eppf(EppfModel::dirichlet(beta), sizes));
    }
  }
}

TEST_CASE("symmetry under permutations of the block sizes") {
  Rng rng(13);
  for (auto model : {EppfModel::dirichlet(1.3), EppfModel::pitman_yor(0.4, 0.8)}) {
    Sizes sizes{4, 1, 2, 1, 3};
    const double reference = log_eppf(model, sizes);
    for (int rep = 0; rep < 200; ++rep) {
      for (std::size_t i = sizes.size() - 1; i > 0; --i) std::swap(sizes[i], sizes[rng.uniform_index(i + 1)]);
      CHECK(log_eppf(model, sizes) == doctest::Approx(reference).epsilon(1e-13));
    }
  }
}

TEST_CASE("addition rule") {
  CHECK(check_addition_rule(EppfModel::dirichlet(1.0), Sizes{1}) < 1e-15);
  CHECK(check_addition_rule(EppfModel::pitman_yor(0.5, 0.5), Sizes{2, 1}) < 1e-12);
  CHECK(check_addition_rule(EppfModel::identical(), Sizes{3}) == 0.0);
  CHECK(check_addition_rule(EppfModel::iid(), Sizes{1, 1}) == 0.0);
  Rng rng(14);
  for (auto model : {EppfModel::dirichlet(0.5), EppfModel::dirichlet(3.0), EppfModel::pitman_yor(0.25, 0.5)}) {
    for (int rep = 0; rep < 200; ++rep) CHECK(check_addition_rule(model, random_composition(10, rng)) < 1e-12);
  }
}

TEST_CASE("tie probabilities") {
  CHECK(tie_probability(EppfModel::dirichlet(1.0)) == 0.5);
  CHECK(tie_probability(EppfModel::pitman_yor(0.5, 0.5)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(tie_probability(EppfModel::iid()) == 0.0);
  CHECK(tie_probability(EppfModel::identical()) == 1.0);
  for (auto model : {EppfModel::dirichlet(0.3), EppfModel::dirichlet(5.0), EppfModel::pitman_yor(0.2, 0.1)}) {
    CHECK(tie_probability(model) == doctest::Approx(eppf(model, Sizes{2})).epsilon(1e-14));
  }
  CHECK(EppfModel::dirichlet_from_tie(0.25).variant().index() == 0);
  CHECK(std::get<EppfModel::Dirichlet>(EppfModel::dirichlet_from_tie(0.25).variant()).beta == doctest::Approx(3.0));
  CHECK_THROWS_AS(EppfModel::dirichlet_from_tie(0.0), std::invalid_argument);
  CHECK_THROWS_AS(EppfModel::dirichlet(0.0), std::invalid_argument);
  CHECK_THROWS_AS(EppfModel::pitman_yor(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EppfModel::pitman_yor(0.5, -0.5), std::invalid_argument);
}

TEST_CASE("normalized inverse-Gaussian tie probability") {
  CHECK(nig_tie_probability(1.0) == doctest::Approx(0.5 * std::exp(1.0) * kE1At1).epsilon(1e-12));
  CHECK(nig_tie_probability(1.0) == doctest::Approx(0.29817).epsilon(1e-4));
  CHECK(nig_tie_probability(100.0) < 0.02);
  CHECK(nig_tie_probability(1e-4) <= 0.5 + 1e-3);
  // Inequality bounds on E1 bracket the tie probability for every beta.
  for (double beta : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    const double lo = 0.5 * (1.0 + 0.5 * beta * beta * std::log1p(2.0 / beta) - beta);
    const double hi = 0.5 * (1.0 + beta * beta * std::log1p(1.0 / beta) - beta);
    const double rho = nig_tie_probability(beta);
    CHECK(lo < rho);
    CHECK(rho < hi);
    CHECK(rho > 0.0);
    CHECK(rho < 0.5);
  }
  CHECK_THROWS_AS(nig_tie_probability(0.0), std::domain_error);
}

TEST_CASE("prediction weights") {
  auto w = prediction_weights(EppfModel::dirichlet(2.0), Sizes{3, 1});
  CHECK(w.existing[0] == doctest::Approx(0.5));
  CHECK(w.existing[1] == doctest::Approx(1.0 / 6.0));
  CHECK(w.fresh == doctest::Approx(1.0 / 3.0));
  w = prediction_weights(EppfModel::pitman_yor(0.5, 0.5), Sizes{1});
  CHECK(w.existing[0] == doctest::Approx(0.5 / 1.5));
  CHECK(w.fresh == doctest::Approx(1.0 / 1.5));
  w = prediction_weights(EppfModel::pitman_yor(0.5, 0.5), Sizes{});
  CHECK(w.existing.empty());
  CHECK(w.fresh == 1.0);

  SUBCASE("closed forms agree with EPPF ratios and sum to one") {
    Rng rng(15);
    for (auto model : {EppfModel::dirichlet(0.6), EppfModel::pitman_yor(0.3, 1.7), EppfModel::pitman_yor(0.7, -0.5)}) {
      for (int rep = 0; rep < 100; ++rep) {
        Sizes counts = random_composition(9, rng);
        const auto pw = prediction_weights(model, counts);
        const double base = eppf(model, counts);
        double total = pw.fresh;
        for (std::size_t j = 0; j < counts.size(); ++j) {
          ++counts[j];
          CHECK(pw.existing[j] == doctest::Approx(eppf(model, counts) / base).epsilon(1e-11));
          --counts[j];
          CHECK(pw.existing[j] >= 0.0);
          total += pw.existing[j];
        }
        counts.push_back(1);
        CHECK(pw.fresh == doctest::Approx(eppf(model, counts) / base).epsilon(1e-11));
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("sequential prediction reproduces EPPF partition frequencies") {
  constexpr std::size_t kReps = 1'000'000;
  constexpr std::size_t kN = 5;
  for (auto model : {EppfModel::dirichlet(1.5), EppfModel::pitman_yor(0.5, 0.5)}) {
    Rng rng(16);
    std::map<std::vector<std::size_t>, std::size_t> freq;
    std::vector<std::size_t> labels(kN);
    std::vector<std::size_t> counts;
    for (std::size_t rep = 0; rep < kReps; ++rep) {
      counts.clear();
      for (std::size_t i = 0; i < kN; ++i) {
        const auto pw = prediction_weights(model, counts);
        std::vector<double> w(pw.existing);
        w.push_back(pw.fresh);
        const std::size_t pick = rng.categorical(w);
        if (pick == counts.size()) counts.push_back(0);
        ++counts[pick];
        labels[i] = pick;
      }
      ++freq[labels];
    }
    double worst = 0.0;
    std::size_t visited = 0;
    for_each_partition(kN, [&](std::span<const std::size_t> rgs, std::size_t blocks) {
      std::vector<std::size_t> key(rgs.begin(), rgs.end());
      Sizes sizes(blocks, 0);
      for (auto b : key) ++sizes[b];
      const double p = eppf(model, sizes);
      const double f = static_cast<double>(freq[key]) / kReps;
      worst = std::max(worst, testing::z_score(f, p, testing::binomial_se(p, kReps)));
      ++visited;
    });
    CHECK(visited == bell_number(kN));
    INFO(model.describe());
    CHECK(worst < 3.0);
  }
}
