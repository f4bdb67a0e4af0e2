#include "verify.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "esbmix/analytics.hpp"
#include "esbmix/eppf.hpp"
#include "esbmix/kernels.hpp"
#include "esbmix/mcmc.hpp"
#include "esbmix/numerics.hpp"
#include "esbmix/sticks.hpp"

namespace esbmix::cli {

namespace {

constexpr double kZ = 4.0;

CheckResult make(std::string name, double statistic, double threshold, std::string detail) {
  return {std::move(name), statistic < threshold, statistic, threshold, std::move(detail)};
}

std::vector<std::size_t> random_composition(Rng& rng, std::size_t max_n) {
  const std::size_t n = 1 + rng.uniform_index(max_n);
  std::vector<std::size_t> sizes;
  std::size_t left = n;
  while (left > 0) {
    const std::size_t s = 1 + rng.uniform_index(left);
    sizes.push_back(s);
    left -= s;
  }
  return sizes;
}

double batch_means_se(const std::vector<double>& x, std::size_t batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += x[b * len + i];
    means[b] /= static_cast<double>(len);
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= static_cast<double>(batches);
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

CheckResult check_addition_rule(Rng& rng) {
  const std::vector<EppfModel> models{EppfModel::dirichlet(0.5), EppfModel::dirichlet(3.0),
                                      EppfModel::pitman_yor(0.25, 0.5), EppfModel::pitman_yor(0.5, 1.0)};
  double worst = 0.0;
  for (const auto& m : models) {
    for (int i = 0; i < 200; ++i) worst = std::max(worst, check_addition_rule(m, random_composition(rng, 10)));
  }
  return make("eppf_addition_rule", worst, 1e-12, fmt::format("max residual {:.3g} over 800 compositions", worst));
}

CheckResult check_round_trip(Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(30);
    for (auto& x : v) x = rng.uniform();
    const auto back = sb_inverse(sb_transform(v));
    // Rounding in w_i is amplified by 1 / prod_{i<k}(1 - v_i) in v_k, so the
    // error is measured on the scale of the remaining stick.
    double remaining = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      worst = std::max(worst, std::abs(back[i] - v[i]) * remaining);
      remaining *= 1.0 - v[i];
    }
  }
  return make("stick_round_trip", worst, 1e-12,
              fmt::format("max |v_k - inverse(transform(v))_k| prod_(i<k)(1 - v_i) = {:.3g}", worst));
}

CheckResult check_2f1() {
  const double err = std::abs(numerics::gauss_2f1_11(3.0, 0.5) - 4.0 * (1.0 - std::numbers::ln2));
  return make("gauss_2f1_spot", err, 1e-10, fmt::format("|2F1(1,1;3;1/2) - 4(1 - ln 2)| = {:.3g}", err));
}

CheckResult check_e1_bounds() {
  double violations = 0.0;
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double e1 = numerics::exp_integral_e1(x);
    const double lo = 0.5 * std::exp(-x) * std::log1p(2.0 / x);
    const double hi = std::exp(-x) * std::log1p(1.0 / x);
    if (!(lo < e1 && e1 < hi)) violations += 1.0;
  }
  return make("exp_integral_bounds", violations, 0.5, fmt::format("{} sandwich violations at 6 points", violations));
}

CheckResult check_ordering(Rng& rng, Fault fault) {
  auto closed = [&](double beta, double theta) {
    const double p = ordering_probability_dsb(beta, theta);
    return fault == Fault::ordering_sign ? 2.0 - p : p;
  };
  double worst_z = 0.0;
  double worst_identity = 0.0;
  for (auto [beta, theta] : {std::pair{1.0, 1.0}, std::pair{9.0, 2.0}}) {
    const auto mc = ordering_probability_mc(LengthProcessSpec::dsb(beta, theta), 1, 200'000, rng);
    worst_z = std::max(worst_z, std::abs(closed(beta, theta) - mc.value) / mc.std_error);
  }
  for (double beta : {0.5, 1.0, 9.0}) {
    const double remark = (1.0 + beta * std::numbers::ln2) / (1.0 + beta);
    worst_identity = std::max(worst_identity, std::abs(closed(beta, 1.0) - remark));
  }
  // Both comparisons must hold, so each is scaled by its own tolerance.
  const double statistic = std::max(worst_z / kZ, worst_identity / 1e-10);
  return make("ordering_probability", statistic, 1.0,
              fmt::format("max z vs Monte Carlo {:.3f}; max deviation from theta=1 identity {:.3g}", worst_z,
                          worst_identity));
}

CheckResult check_allocation_paths() {
  double worst = 0.0;
  std::vector<std::size_t> d;
  for (std::size_t n = 1; n <= 3; ++n) {
    d.assign(n, 1);
    for (;;) {
      const AllocationVector av(d);
      for (auto [beta, theta] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.5}}) {
        const double generic = allocation_probability(av, EppfModel::dirichlet(beta), 1.0, theta);
        const double closed = allocation_probability_dsb(av, beta, theta);
        worst = std::max(worst, std::abs(generic - closed));
      }
      std::size_t i = 0;
      while (i < n && d[i] == 4) d[i++] = 1;
      if (i == n) break;
      ++d[i];
    }
  }
  const double spot = std::abs(allocation_probability_dsb(AllocationVector({2}), 1.0, 1.0) - 5.0 / 24.0);
  worst = std::max(worst, spot);
  return make("allocation_closed_vs_generic", worst, 1e-10,
              fmt::format("max path difference {:.3g} (includes P[d=(2)] = 5/24 spot check)", worst));
}

CheckResult check_allocation_mc(Rng& rng) {
  const auto spec = LengthProcessSpec::species_driven(EppfModel::pitman_yor(0.5, 0.5), 1.0, 1.0);
  double worst = 0.0;
  for (const auto& dv : {std::vector<std::size_t>{1, 1, 2}, std::vector<std::size_t>{2, 3}, std::vector<std::size_t>{1}}) {
    const AllocationVector d(dv);
    const double exact = allocation_probability(d, spec.tie_model(), 1.0, 1.0);
    const auto mc = allocation_probability_mc(d, spec, 200'000, rng);
    worst = std::max(worst, std::abs(exact - mc.value) / mc.std_error);
  }
  return make("allocation_exact_vs_mc", worst, kZ, fmt::format("max z {:.3f} over 3 allocation vectors", worst));
}

CheckResult check_tie_probability(Rng& rng) {
  const std::size_t reps = 200'000;
  double worst = 0.0;
  for (const auto& model : {EppfModel::dirichlet(1.0), EppfModel::pitman_yor(0.5, 0.5)}) {
    const auto spec = LengthProcessSpec::species_driven(model, 1.0, 1.0);
    std::size_t ties = 0;
    for (std::size_t r = 0; r < reps; ++r) ties += sample_lengths_prefix(spec, 2, rng).num_distinct() == 1 ? 1 : 0;
    const double rho = tie_probability(model);
    const double p = static_cast<double>(ties) / static_cast<double>(reps);
    worst = std::max(worst, std::abs(p - rho) / std::sqrt(rho * (1.0 - rho) / static_cast<double>(reps)));
  }
  return make("tie_probability_mc", worst, kZ, fmt::format("max z {:.3f}", worst));
}

CheckResult check_normal_gamma(Rng& rng) {
  NormalGammaKernel k{0.5, 2.0, 1.5, 0.8};
  const std::vector<double> ys{-0.3, 1.2, 0.7, 2.1, 0.4};
  const double n = static_cast<double>(ys.size());
  double ybar = 0.0;
  for (double y : ys) ybar += y / n;
  const double target = (k.lambda * k.mu0 + n * ybar) / (k.lambda + n);
  const std::size_t draws = 50'000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double m = k.sample_posterior(ys, rng).mean;
    sum += m;
    sum_sq += m * m;
  }
  const double mean = sum / static_cast<double>(draws);
  const double se = std::sqrt((sum_sq / static_cast<double>(draws) - mean * mean) / static_cast<double>(draws));
  const double z = std::abs(mean - target) / se;
  return make("normal_gamma_conjugate", z, kZ, fmt::format("posterior mean of m: z = {:.3f}", z));
}

CheckResult check_niw(Rng& rng) {
  NormalInvWishartKernel k;
  k.mu0 = Eigen::Vector2d(1.0, -1.0);
  k.lambda = 0.5;
  k.psi << 2.0, 0.3, 0.3, 1.0;
  k.nu = 4.0;
  const std::vector<Eigen::Vector2d> ys{{0.2, 0.1}, {1.5, -0.4}, {0.9, 0.3}, {-0.2, 0.8}};
  const double n = static_cast<double>(ys.size());
  Eigen::Vector2d ybar = Eigen::Vector2d::Zero();
  for (const auto& y : ys) ybar += y / n;
  const Eigen::Vector2d target = (k.lambda * k.mu0 + n * ybar) / (k.lambda + n);
  const std::size_t draws = 50'000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum_sq = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < draws; ++i) {
    const Eigen::Vector2d m = k.sample_posterior(ys, rng).mean;
    sum += m;
    sum_sq += m.cwiseProduct(m);
  }
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double mean = sum(c) / static_cast<double>(draws);
    const double se = std::sqrt((sum_sq(c) / static_cast<double>(draws) - mean * mean) / static_cast<double>(draws));
    worst = std::max(worst, std::abs(mean - target(c)) / se);
  }
  return make("niw_conjugate", worst, kZ, fmt::format("posterior mean of m: max z = {:.3f}", worst));
}

CheckResult check_rho(Rng& rng) {
  const RandomRho prior{1.0, 0.0, 1.0};
  double worst = 0.0;
  for (auto [k, target] : {std::pair<std::size_t, double>{2, 1.0 / 3.0}, std::pair<std::size_t, double>{1, 2.0 / 3.0}}) {
    std::vector<double> xs;
    double rho = 0.5;
    for (int i = 0; i < 50'000; ++i) {
      rho = sample_rho(rho, 2, k, prior, rng);
      xs.push_back(rho);
    }
    double mean = 0.0;
    for (double x : xs) mean += x / static_cast<double>(xs.size());
    worst = std::max(worst, std::abs(mean - target) / batch_means_se(xs));
  }
  return make("rho_full_conditional", worst, kZ, fmt::format("m=2 posterior means: max z = {:.3f}", worst));
}

CheckResult check_prior_recovery(Rng& rng) {
  const auto spec = LengthProcessSpec::dsb(1.0, 1.0);
  constexpr std::size_t kLengths = 10;
  std::map<std::size_t, double> prior_pmf, chain_pmf;
  const std::size_t prior_reps = 100'000;
  for (std::size_t r = 0; r < prior_reps; ++r) {
    prior_pmf[sample_lengths_prefix(spec, kLengths, rng).num_distinct()] += 1.0 / static_cast<double>(prior_reps);
  }
  FitConfig config;
  config.prior = spec;
  config.min_sticks = kLengths;
  config.schedule = {30'000, 0, 1};
  NormalGammaKernel kernel;
  const std::vector<double> none;
  auto state = initial_state<NormalGammaKernel>(none, kernel, config, rng);
  const std::size_t sweeps = 30'000;
  for (std::size_t s = 0; s < sweeps; ++s) {
    gibbs_sweep<NormalGammaKernel>(state, none, kernel, config, rng);
    std::set<std::size_t> slots(state.lengths.atom_index().begin(), state.lengths.atom_index().begin() + kLengths);
    chain_pmf[slots.size()] += 1.0 / static_cast<double>(sweeps);
  }
  const double tv = total_variation(prior_pmf, chain_pmf);
  return make("prior_recovery", tv, 0.05, fmt::format("TV(K over 10 lengths) = {:.4f} after {} sweeps", tv, sweeps));
}

}  // namespace

std::vector<CheckResult> run_verification_suite(const VerifyOptions& options) {
  auto rng = [&](std::uint64_t i) { return Rng::stream(options.seed, i); };
  std::vector<CheckResult> out;
  {
    auto r = rng(0);
    out.push_back(check_addition_rule(r));
  }
  {
    auto r = rng(1);
    out.push_back(check_round_trip(r));
  }
  out.push_back(check_2f1());
  out.push_back(check_e1_bounds());
  {
    auto r = rng(2);
    out.push_back(check_ordering(r, options.fault));
  }
  out.push_back(check_allocation_paths());
  {
    auto r = rng(3);
    out.push_back(check_allocation_mc(r));
  }
  {
    auto r = rng(4);
    out.push_back(check_tie_probability(r));
  }
  {
    auto r = rng(5);
    out.push_back(check_normal_gamma(r));
  }
  {
    auto r = rng(6);
    out.push_back(check_niw(r));
  }
  {
    auto r = rng(7);
    out.push_back(check_rho(r));
  }
  {
    auto r = rng(8);
    out.push_back(check_prior_recovery(r));
  }
  return out;
}

}  // namespace esbmix::cli
