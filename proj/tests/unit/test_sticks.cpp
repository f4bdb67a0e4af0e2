#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "esbmix/numerics.hpp"
#include "esbmix/sticks.hpp"
#include "support/stats.hpp"

using namespace esbmix;
namespace t = esbmix::testing;

TEST_CASE("sb_transform") {
  auto w = sb_transform(std::vector<double>{0.5, 0.5, 0.5});
  CHECK(w == std::vector<double>{0.5, 0.25, 0.125});
  w = sb_transform(std::vector<double>{1.0, 0.3, 0.9});
  CHECK(w == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(sb_transform(std::vector<double>{}).empty());
  CHECK_THROWS_AS(sb_transform(std::vector<double>{0.5, 1.5}), std::domain_error);

  SUBCASE("remaining stick equals the product of complements") {
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> v(40);
      for (auto& x : v) x = rng.beta(1.0, 3.0);
      const auto weights = sb_transform(v);
      double partial = 0.0;
      double product = 1.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        partial += weights[j];
        product *= 1.0 - v[j];
        CHECK(partial <= 1.0 + 1e-15);
        CHECK(std::abs((1.0 - partial) - product) < 1e-12);
      }
    }
  }
}

TEST_CASE("sb_inverse") {
  CHECK(sb_inverse(std::vector<double>{0.5, 0.25, 0.125}) == std::vector<double>{0.5, 0.5, 0.5});
  auto v = sb_inverse(std::vector<double>{0.3, 0.7});
  CHECK(v[0] == doctest::Approx(0.3));
  CHECK(v[1] == doctest::Approx(1.0));
  v = sb_inverse(std::vector<double>{0.3, 0.7, 0.0});
  CHECK(v[2] == 0.0);
  CHECK(sb_inverse(std::vector<double>{1.0, 0.0, 0.0}) == std::vector<double>{1.0, 0.0, 0.0});
  CHECK_THROWS_AS(sb_inverse(std::vector<double>{0.5, -0.1}), std::domain_error);
  CHECK_THROWS_AS(sb_inverse(std::vector<double>{0.6, 0.5}), std::domain_error);
  CHECK_NOTHROW(sb_inverse(std::vector<double>{0.6, 0.4 + 5e-13}));
}

TEST_CASE("round trip of 30 uniform lengths to 1e-12") {
  // Literal absolute requirement. In double precision the rounding of w_i
  // reaches v_k amplified by 1 / prod_{i<k}(1 - v_i), so this fails whenever
  // the remaining stick drops below about 1e-4; the scaled bound below is the
  // attainable form.
  Rng rng(22);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> v(30);
    for (auto& x : v) x = rng.uniform();
    const auto back = sb_inverse(sb_transform(v));
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(back[i] - v[i]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("round trips") {
  Rng rng(22);
  double worst = 0.0, worst_short = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> v(30);
    for (auto& x : v) x = rng.uniform();
    const auto back = sb_inverse(sb_transform(v));
    double remaining = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      worst = std::max(worst, std::abs(back[i] - v[i]) * remaining);
      if (remaining > 1e-3) worst_short = std::max(worst_short, std::abs(back[i] - v[i]));
      remaining *= 1.0 - v[i];
    }
  }
  CHECK(worst < 1e-14);
  CHECK(worst_short < 1e-12);

  worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    // A valid weight prefix: a random split of a random mass below one.
    std::vector<double> w(20);
    for (auto& x : w) x = rng.uniform();
    const double scale = rng.uniform() / std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x *= scale;
    const auto again = sb_transform(sb_inverse(w));
    for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(again[i] - w[i]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("LengthPrefix bookkeeping") {
  LengthPrefix p;
  p.push_new(0.3);
  p.push_new(0.6);
  p.push_existing(0);
  p.push_existing(1);
  p.push_existing(0);
  CHECK(p.is_consistent());
  CHECK(p.num_distinct() == 2);
  CHECK(std::vector<std::size_t>(p.counts().begin(), p.counts().end()) == std::vector<std::size_t>{3, 2});

  p.assign_existing(1, 0);  // slot 1 keeps one member
  CHECK(p.is_consistent());
  CHECK(p.counts()[0] == 4);
  p.assign_existing(3, 0);  // slot 1 empties and is removed
  CHECK(p.is_consistent());
  CHECK(p.num_distinct() == 1);
  CHECK(p.counts()[0] == 5);

  p.assign_new(2, 0.9);
  CHECK(p.is_consistent());
  CHECK(p.values()[2] == 0.9);
  p.set_distinct_value(0, 0.25);
  CHECK(p.is_consistent());
  CHECK(p.values()[0] == 0.25);
  CHECK(p.values()[4] == 0.25);

  p.assign_new(2, 0.8);  // replaces its own singleton slot
  CHECK(p.is_consistent());
  CHECK(p.num_distinct() == 2);

  p.truncate(2);
  CHECK(p.is_consistent());
  CHECK(p.size() == 2);
  CHECK(p.num_distinct() == 1);

  CHECK_THROWS_AS(p.push_existing(5), std::out_of_range);
  CHECK_THROWS_AS(p.assign_new(7, 0.1), std::out_of_range);
}

TEST_CASE("LengthProcessSpec validation and marginals") {
  CHECK_THROWS_AS(LengthProcessSpec::iid_beta(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LengthProcessSpec::shared_beta(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(LengthProcessSpec::species_driven(EppfModel::dirichlet(1.0), 1.0, 0.0), std::invalid_argument);
  const auto dsb = LengthProcessSpec::dsb(2.0, 3.0);
  CHECK(dsb.base_a() == 1.0);
  CHECK(dsb.base_b() == 3.0);
  CHECK(tie_probability(dsb.tie_model()) == doctest::Approx(1.0 / 3.0));
  CHECK(tie_probability(LengthProcessSpec::iid_beta(1, 1).tie_model()) == 0.0);
  CHECK(tie_probability(LengthProcessSpec::shared_beta(1, 1).tie_model()) == 1.0);
}

TEST_CASE("sample_lengths_prefix: tie structure by regime") {
  Rng rng(23);
  const auto shared = sample_lengths_prefix(LengthProcessSpec::shared_beta(1.0, 2.0), 5, rng);
  CHECK(shared.num_distinct() == 1);
  CHECK(shared.counts()[0] == 5);
  const auto identical = sample_lengths_prefix(
      LengthProcessSpec::species_driven(EppfModel::identical(), 1.0, 2.0), 5, rng);
  CHECK(identical.num_distinct() == 1);
  const auto iid = sample_lengths_prefix(LengthProcessSpec::iid_beta(1.0, 2.0), 50, rng);
  CHECK(iid.num_distinct() == 50);
  const auto iid_species = sample_lengths_prefix(LengthProcessSpec::species_driven(EppfModel::iid(), 1.0, 2.0), 50, rng);
  CHECK(iid_species.num_distinct() == 50);
  CHECK(iid_species.is_consistent());
  CHECK_THROWS_AS(sample_lengths_prefix(LengthProcessSpec::iid_beta(1.0, 1.0), 0, rng), std::invalid_argument);
}

TEST_CASE("pair law of the first two lengths") {
  constexpr std::size_t kReps = 1'000'000;
  struct Case {
    LengthProcessSpec spec;
    double rho;
  };
  for (const auto& c : {Case{LengthProcessSpec::dsb(1.0, 1.0), 0.5},
                        Case{LengthProcessSpec::dsb(3.0, 2.0), 0.25},
                        Case{LengthProcessSpec::species_driven(EppfModel::pitman_yor(0.5, 0.5), 2.0, 3.0), 1.0 / 3.0}}) {
    INFO(c.spec.describe());
    Rng rng(24);
    std::vector<double> v1(kReps), v2(kReps);
    std::size_t ties = 0;
    for (std::size_t i = 0; i < kReps; ++i) {
      const auto p = sample_lengths_prefix(c.spec, 2, rng);
      v1[i] = p.values()[0];
      v2[i] = p.values()[1];
      ties += p.num_distinct() == 1 ? 1 : 0;
    }
    const double freq = static_cast<double>(ties) / kReps;
    CHECK(t::z_score(freq, c.rho, t::binomial_se(c.rho, kReps)) < 3.0);

    const auto corr = t::correlation_with_se(v1, v2, 100);
    CHECK(t::z_score(corr.value, c.rho, corr.se) < 3.0);

    // Exchangeability and Be(a, b) marginals at every position.
    const double a = c.spec.base_a();
    const double b = c.spec.base_b();
    auto cdf = [&](double x) { return numerics::beta_cdf(x, a, b); };
    CHECK(t::ks_pvalue(t::ks_statistic(v1, cdf), kReps) > 0.01);
    CHECK(t::ks_pvalue(t::ks_statistic(v2, cdf), kReps) > 0.01);
  }
}

TEST_CASE("marginals at later positions") {
  constexpr std::size_t kReps = 100'000;
  const auto spec = LengthProcessSpec::dsb(0.5, 2.0);
  Rng rng(25);
  std::vector<std::vector<double>> columns(6, std::vector<double>(kReps));
  for (std::size_t i = 0; i < kReps; ++i) {
    const auto p = sample_lengths_prefix(spec, 6, rng);
    for (std::size_t j = 0; j < 6; ++j) columns[j][i] = p.values()[j];
  }
  for (std::size_t j = 0; j < 6; ++j) {
    const double d = t::ks_statistic(columns[j], [](double x) { return numerics::beta_cdf(x, 1.0, 2.0); });
    CHECK(t::ks_pvalue(d, kReps) > 0.01);
  }
}

TEST_CASE("distinct count of three Dirichlet-driven lengths matches a Polya urn") {
  constexpr std::size_t kReps = 200'000;
  Rng rng(26);
  t::RunningStats sticks, urn;
  for (std::size_t i = 0; i < kReps; ++i) {
    sticks.add(static_cast<double>(sample_lengths_prefix(LengthProcessSpec::dsb(1.0, 1.0), 3, rng).num_distinct()));
    urn.add(static_cast<double>(t::polya_urn_path(1.0, 3, rng).back()));
  }
  const double se = std::hypot(sticks.std_error(), urn.std_error());
  CHECK(t::z_score(sticks.mean(), urn.mean(), se) < 3.0);
  CHECK(t::z_score(sticks.mean(), 1.0 + 0.5 + 1.0 / 3.0, sticks.std_error()) < 3.0);
}

TEST_CASE("extend_weights_until") {
  Rng rng(27);
  const auto one = extend_weights_until(LengthPrefix{}, LengthProcessSpec::dsb(1.0, 1.0), 0.0, rng);
  CHECK(one.prefix.size() == 1);

  LengthPrefix half;
  half.push_new(0.5);
  const auto geometric = extend_weights_until(half, LengthProcessSpec::shared_beta(1.0, 1.0), 0.9, rng);
  CHECK(geometric.prefix.size() == 4);
  CHECK(geometric.weights == std::vector<double>{0.5, 0.25, 0.125, 0.0625});

  for (const auto& spec : {LengthProcessSpec::iid_beta(1.0, 5.0), LengthProcessSpec::shared_beta(1.0, 5.0),
                           LengthProcessSpec::dsb(1.0, 5.0),
                           LengthProcessSpec::species_driven(EppfModel::pitman_yor(0.3, 1.0), 2.0, 2.0)}) {
    const auto ext = extend_weights_until(LengthPrefix{}, spec, 1.0 - 1e-6, rng);
    CHECK(std::accumulate(ext.weights.begin(), ext.weights.end(), 0.0) >= 1.0 - 1e-6 - 1e-12);
    CHECK(ext.prefix.is_consistent());
    CHECK(ext.weights.size() == ext.prefix.size());
  }

  LengthPrefix tiny;
  tiny.push_new(1e-9);
  CHECK_THROWS_AS(extend_weights_until(tiny, LengthProcessSpec::shared_beta(1.0, 1.0), 0.5, rng, 1000),
                  ExtensionCapExceeded);
  CHECK_THROWS_AS(extend_weights_until(LengthPrefix{}, LengthProcessSpec::dsb(1, 1), 1.0, rng), std::invalid_argument);
}

TEST_CASE("properness: the residual stick vanishes") {
  constexpr std::size_t kReps = 10'000;
  constexpr std::size_t kM = 200;
  auto mean_residual = [&](const LengthProcessSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    t::RunningStats s;
    for (std::size_t i = 0; i < kReps; ++i) {
      const auto p = sample_lengths_prefix(spec, kM, rng);
      double r = 1.0;
      for (double v : p.values()) r *= 1.0 - v;
      s.add(r);
    }
    return s;
  };
  for (double theta : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(mean_residual(LengthProcessSpec::iid_beta(1.0, theta), 28).mean() < 1e-3);
  }
  for (double theta : {0.5, 1.0, 3.0}) {
    CHECK(mean_residual(LengthProcessSpec::dsb(1.0, theta), 29).mean() < 1e-3);
  }
  // A shared length keeps E[(1 - v)^m] = theta / (theta + m), which decays
  // only like 1/m.
  for (double theta : {1.0, 10.0}) {
    const auto s = mean_residual(LengthProcessSpec::shared_beta(1.0, theta), 30);
    CHECK(t::z_score(s.mean(), theta / (theta + kM), s.std_error()) < 3.0);
  }
}
