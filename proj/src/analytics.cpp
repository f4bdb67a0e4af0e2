#include "esbmix/analytics.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "esbmix/numerics.hpp"
#include "esbmix/parallel.hpp"

namespace esbmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kStreamStepCap = 100'000'000;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Sticks of a length process generated on demand, tracking only the log
// residual log prod_{i<=index}(1 - v_i) and the tie counts. While a single
// distinct value is present under a Dirichlet, Pitman-Yor or identical law,
// the stream jumps over whole runs of ties at once.
class StickStream {
 public:
  StickStream(const LengthProcessSpec& spec, Rng& rng) : spec_(spec), rng_(rng), tie_model_(spec.tie_model()) {
    std::visit(overloaded{[&](const EppfModel::Dirichlet&) { run_capable_ = true; },
                          [&](const EppfModel::PitmanYor&) { run_capable_ = true; },
                          [&](const EppfModel::IidDegenerate&) { run_capable_ = false; },
                          [&](const EppfModel::IdenticalDegenerate&) { run_capable_ = true; }},
               tie_model_.variant());
  }

  /// 1-based index i of the stick with log R_i < log_s <= log R_{i-1}.
  /// Successive calls must pass nonincreasing log_s.
  std::size_t locate(double log_s) {
    while (index_ == 0 || log_s <= log_residual_) advance(log_s);
    return index_;
  }

 private:
  void advance(double log_s) {
    if (index_ > 0 && run_capable_ && counts_.size() == 1) {
      jump_run(log_s);
    } else {
      step();
    }
  }

  void step() {
    if (++steps_ > kStreamStepCap) {
      throw ExtensionCapExceeded(fmt::format("stick stream exceeded {} sticks ({})", kStreamStepCap,
                                             spec_.describe()));
    }
    double v;
    const auto pw = prediction_weights(tie_model_, counts_);
    std::size_t pick = pw.existing.size();
    if (!pw.existing.empty()) {
      scratch_.assign(pw.existing.begin(), pw.existing.end());
      scratch_.push_back(pw.fresh);
      pick = rng_.categorical(scratch_);
    }
    if (pick < pw.existing.size()) {
      ++counts_[pick];
      v = distinct_[pick];
    } else {
      v = rng_.beta(spec_.base_a(), spec_.base_b());
      distinct_.push_back(v);
      counts_.push_back(1);
    }
    // Independent lengths never repeat; keep the bookkeeping bounded.
    if (!run_capable_) {
      distinct_.clear();
      counts_.clear();
    }
    ++index_;
    log_residual_ += std::log1p(-v);
    run_active_ = false;
  }

  // Single distinct value v with count m: the next stick ties with
  // probability (m - alpha)/(m + beta). The number L of further ties before
  // a new value satisfies P[L >= l] = (m0 - alpha)_l / (m0 + beta)_l, with m0
  // the count when the run started; one uniform per run fixes L.
  void jump_run(double log_s) {
    const double v = distinct_[0];
    const double l1v = std::log1p(-v);
    if (!(l1v < 0.0)) {
      step();
      return;
    }
    const double needed_d = std::floor((log_s - log_residual_) / l1v) + 1.0;
    const auto needed = static_cast<std::size_t>(std::clamp(needed_d, 1.0, 1e18));

    double alpha = 0.0, beta = 0.0;
    bool forever = false;
    std::visit(overloaded{[&](const EppfModel::Dirichlet& d) { beta = d.beta; },
                          [&](const EppfModel::PitmanYor& p) {
                            alpha = p.alpha;
                            beta = p.beta;
                          },
                          [&](const EppfModel::IdenticalDegenerate&) { forever = true; },
                          [&](const EppfModel::IidDegenerate&) {}},
               tie_model_.variant());

    std::size_t ties = needed;
    bool new_value_follows = false;
    if (!forever) {
      if (!run_active_) {
        run_active_ = true;
        run_start_ = counts_[0];
        run_done_ = 0;
        run_log_u_ = std::log(rng_.uniform());
      }
      const double m0 = static_cast<double>(run_start_);
      auto log_survive = [&](double l) {
        return std::lgamma(m0 - alpha + l) - std::lgamma(m0 - alpha) - std::lgamma(m0 + beta + l) +
               std::lgamma(m0 + beta);
      };
      const double target = static_cast<double>(run_done_) + static_cast<double>(needed);
      if (log_survive(target) < run_log_u_) {
        // Run ends inside this jump: L = max{l : log_survive(l) >= log u}.
        double lo = static_cast<double>(run_done_);
        double hi = target;
        while (hi - lo > 1.0) {
          const double mid = std::floor(0.5 * (lo + hi));
          if (log_survive(mid) >= run_log_u_) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        ties = static_cast<std::size_t>(lo) - run_done_;
        new_value_follows = true;
      }
      run_done_ += ties;
    }
    counts_[0] += ties;
    index_ += ties;
    log_residual_ += static_cast<double>(ties) * l1v;
    if (new_value_follows) {
      if (++steps_ > kStreamStepCap) {
        throw ExtensionCapExceeded(fmt::format("stick stream exceeded {} sticks ({})", kStreamStepCap,
                                               spec_.describe()));
      }
      const double fresh = rng_.beta(spec_.base_a(), spec_.base_b());
      distinct_.push_back(fresh);
      counts_.push_back(1);
      ++index_;
      log_residual_ += std::log1p(-fresh);
      run_active_ = false;
    }
  }

  const LengthProcessSpec& spec_;
  Rng& rng_;
  EppfModel tie_model_;
  bool run_capable_ = false;

  std::size_t index_ = 0;
  double log_residual_ = 0.0;
  std::vector<double> distinct_;
  std::vector<std::size_t> counts_;
  std::vector<double> scratch_;
  std::size_t steps_ = 0;

  bool run_active_ = false;
  std::size_t run_start_ = 0;
  std::size_t run_done_ = 0;
  double run_log_u_ = 0.0;
};

std::size_t count_distinct(std::vector<std::size_t> d) {
  std::sort(d.begin(), d.end());
  return static_cast<std::size_t>(std::unique(d.begin(), d.end()) - d.begin());
}

}  // namespace

// --- AllocationVector ---------------------------------------------------------

AllocationVector::AllocationVector(std::vector<std::size_t> d) : d_(std::move(d)) {
  if (d_.empty()) throw std::invalid_argument("AllocationVector: d must be nonempty");
  std::size_t k = 0;
  for (std::size_t x : d_) {
    if (x == 0) throw std::invalid_argument("AllocationVector: entries are 1-based and must be >= 1");
    k = std::max(k, x);
  }
  r_.assign(k, 0);
  for (std::size_t x : d_) ++r_[x - 1];
  t_.assign(k, 0);
  std::size_t above = 0;
  for (std::size_t i = k; i-- > 0;) {
    t_[i] = above;
    above += r_[i];
  }
}

// --- ordering -------------------------------------------------------------------

double ordering_cutoff(double v) {
  if (v >= 0.5) return 1.0;
  return v / (1.0 - v);
}

double ordering_probability_dsb(double beta, double theta) {
  if (!(beta > 0.0) || !(theta > 0.0)) {
    throw std::invalid_argument("ordering_probability_dsb: beta and theta must be > 0");
  }
  const double f = numerics::gauss_2f1_11(theta + 2.0, 0.5);
  return 1.0 - f * beta * theta / (2.0 * (beta + 1.0) * (theta + 1.0));
}

double ordering_probability_general(const EppfModel& model, double base_a, double base_b,
                                    std::size_t mc_draws, Rng& rng) {
  if (!(base_a > 0.0) || !(base_b > 0.0)) {
    throw std::invalid_argument("ordering_probability_general: Beta shapes must be > 0");
  }
  const double rho = tie_probability(model);
  double expected_cdf;
  if (base_a == 1.0) {
    // E[1 - (1 - c(v))^theta] for v ~ Be(1, theta).
    const double theta = base_b;
    expected_cdf = 1.0 - numerics::gauss_2f1_11(theta + 2.0, 0.5) * theta / (2.0 * (theta + 1.0));
  } else {
    if (mc_draws == 0) throw std::invalid_argument("ordering_probability_general: mc_draws must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < mc_draws; ++i) {
      acc += numerics::beta_cdf(ordering_cutoff(rng.beta(base_a, base_b)), base_a, base_b);
    }
    expected_cdf = acc / static_cast<double>(mc_draws);
  }
  return rho + (1.0 - rho) * expected_cdf;
}

double conditional_ordering_probability(const LengthPrefix& prefix, const EppfModel& model, double base_a,
                                        double base_b) {
  if (prefix.empty()) throw std::invalid_argument("conditional_ordering_probability: prefix must be nonempty");
  const double cut = ordering_cutoff(prefix.values().back());
  const auto pw = prediction_weights(model, prefix.counts());
  double out = 0.0;
  for (std::size_t i = 0; i < pw.existing.size(); ++i) {
    if (prefix.distinct()[i] <= cut) out += pw.existing[i];
  }
  return out + pw.fresh * numerics::beta_cdf(cut, base_a, base_b);
}

double conditional_ordering_probability_dsb(const LengthPrefix& prefix, double beta, double theta) {
  if (prefix.empty()) throw std::invalid_argument("conditional_ordering_probability_dsb: prefix must be nonempty");
  const double cut = ordering_cutoff(prefix.values().back());
  double tied_mass = 0.0;
  for (std::size_t i = 0; i < prefix.num_distinct(); ++i) {
    if (prefix.distinct()[i] <= cut) tied_mass += static_cast<double>(prefix.counts()[i]);
  }
  const double j = static_cast<double>(prefix.size());
  return (tied_mass + beta * (1.0 - std::pow(1.0 - cut, theta))) / (beta + j);
}

McEstimate ordering_probability_mc(const LengthProcessSpec& spec, std::size_t j, std::size_t draws, Rng& rng) {
  if (j == 0 || draws == 0) throw std::invalid_argument("ordering_probability_mc: j and draws must be >= 1");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    const auto prefix = sample_lengths_prefix(spec, j + 1, rng);
    const auto w = sb_transform(prefix.values());
    if (w[j - 1] >= w[j]) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(draws))};
}

// --- allocation probabilities -------------------------------------------------------

double allocation_probability(const AllocationVector& d, const EppfModel& model, double base_a, double base_b,
                              EnumerationLimit limit) {
  const std::size_t k = d.k();
  const auto r = d.r();
  const auto t = d.t();
  std::vector<double> block_r(k), block_t(k);
  std::vector<std::size_t> sizes(k);
  double log_total = kNegInf;
  for_each_partition(
      k,
      [&](std::span<const std::size_t> labels, std::size_t m) {
        std::fill_n(block_r.begin(), m, 0.0);
        std::fill_n(block_t.begin(), m, 0.0);
        std::fill_n(sizes.begin(), m, std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
          block_r[labels[i]] += static_cast<double>(r[i]);
          block_t[labels[i]] += static_cast<double>(t[i]);
          ++sizes[labels[i]];
        }
        double term = log_eppf(model, std::span<const std::size_t>(sizes.data(), m));
        if (term == kNegInf) return;
        for (std::size_t b = 0; b < m; ++b) {
          term += numerics::log_beta_moment(base_a, base_b, block_r[b], block_t[b]);
        }
        log_total = numerics::log_add(log_total, term);
      },
      limit);
  return std::exp(log_total);
}

double allocation_probability_dsb(const AllocationVector& d, double beta, double theta, EnumerationLimit limit) {
  if (!(beta > 0.0) || !(theta > 0.0)) {
    throw std::invalid_argument("allocation_probability_dsb: beta and theta must be > 0");
  }
  const std::size_t k = d.k();
  const auto r = d.r();
  const auto t = d.t();
  std::vector<std::size_t> block_r(k), block_t(k), sizes(k);
  const double log_norm = numerics::log_rising_factorial(beta, k, 1.0);
  const double log_bt = std::log(beta * theta);
  double log_total = kNegInf;
  for_each_partition(
      k,
      [&](std::span<const std::size_t> labels, std::size_t m) {
        std::fill_n(block_r.begin(), m, std::size_t{0});
        std::fill_n(block_t.begin(), m, std::size_t{0});
        std::fill_n(sizes.begin(), m, std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
          block_r[labels[i]] += r[i];
          block_t[labels[i]] += t[i];
          ++sizes[labels[i]];
        }
        double term = static_cast<double>(m) * log_bt - log_norm;
        for (std::size_t b = 0; b < m; ++b) {
          term += std::lgamma(static_cast<double>(sizes[b])) + std::lgamma(static_cast<double>(block_r[b]) + 1.0) -
                  numerics::log_rising_factorial(theta + static_cast<double>(block_t[b]), 1 + block_r[b], 1.0);
        }
        log_total = numerics::log_add(log_total, term);
      },
      limit);
  return std::exp(log_total);
}

McEstimate allocation_probability_mc(const AllocationVector& d, const LengthProcessSpec& spec,
                                     std::size_t replicates, Rng& rng) {
  if (replicates < 2) throw std::invalid_argument("allocation_probability_mc: replicates must be >= 2");
  const auto r = d.r();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    const auto prefix = sample_lengths_prefix(spec, d.k(), rng);
    double log_val = 0.0;
    double log_remaining = 0.0;
    for (std::size_t j = 0; j < d.k(); ++j) {
      const double v = prefix.values()[j];
      if (r[j] > 0) log_val += static_cast<double>(r[j]) * (std::log(v) + log_remaining);
      log_remaining += std::log1p(-v);
    }
    const double val = std::exp(log_val);
    sum += val;
    sum_sq += val * val;
  }
  const double nrep = static_cast<double>(replicates);
  const double mean = sum / nrep;
  const double var = std::max(0.0, (sum_sq - nrep * mean * mean) / (nrep - 1.0));
  return {mean, std::sqrt(var / nrep)};
}

// --- K_n ---------------------------------------------------------------------------

std::vector<std::size_t> allocate_uniforms(const LengthProcessSpec& spec, std::span<const double> u, Rng& rng) {
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  StickStream stream(spec, rng);
  std::vector<std::size_t> d(u.size());
  for (std::size_t idx : order) {
    if (!(u[idx] > 0.0 && u[idx] < 1.0)) throw std::domain_error("allocate_uniforms: u must lie in (0,1)");
    d[idx] = stream.locate(std::log1p(-u[idx]));
  }
  return d;
}

double KnSummary::mean() const {
  double m = 0.0;
  for (const auto& [k, p] : pmf) m += static_cast<double>(k) * p;
  return m;
}

namespace {

std::vector<std::size_t> kn_histogram(const LengthProcessSpec& spec, std::size_t n, std::size_t replicates,
                                      Rng& rng) {
  std::vector<std::size_t> hist(n + 1, 0);
  std::vector<double> u(n);
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    for (auto& x : u) x = rng.uniform();
    ++hist[count_distinct(allocate_uniforms(spec, u, rng))];
  }
  return hist;
}

KnSummary to_summary(std::size_t n, std::size_t replicates, const std::vector<std::size_t>& hist) {
  KnSummary out;
  out.n = n;
  out.replicates = replicates;
  for (std::size_t k = 1; k <= n; ++k) {
    if (hist[k] > 0) out.pmf[k] = static_cast<double>(hist[k]) / static_cast<double>(replicates);
  }
  return out;
}

struct CurveSums {
  std::vector<double> sum, sum_sq;
};

CurveSums kn_curve_sums(const LengthProcessSpec& spec, std::size_t n_max, std::size_t replicates, Rng& rng) {
  CurveSums out{std::vector<double>(n_max, 0.0), std::vector<double>(n_max, 0.0)};
  std::vector<double> u(n_max);
  std::vector<std::size_t> seen;
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    for (auto& x : u) x = rng.uniform();
    const auto d = allocate_uniforms(spec, u, rng);
    seen.clear();
    for (std::size_t i = 0; i < n_max; ++i) {
      if (std::find(seen.begin(), seen.end(), d[i]) == seen.end()) seen.push_back(d[i]);
      const double kn = static_cast<double>(seen.size());
      out.sum[i] += kn;
      out.sum_sq[i] += kn * kn;
    }
  }
  return out;
}

KnCurve finish_curve(const CurveSums& s, std::size_t replicates) {
  KnCurve out;
  const double r = static_cast<double>(replicates);
  for (std::size_t i = 0; i < s.sum.size(); ++i) {
    const double mean = s.sum[i] / r;
    const double var = replicates > 1 ? std::max(0.0, (s.sum_sq[i] - r * mean * mean) / (r - 1.0)) : 0.0;
    out.mean.push_back(mean);
    out.std_error.push_back(std::sqrt(var / r));
  }
  return out;
}

void require_kn_args(std::size_t n, std::size_t replicates) {
  if (n == 0) throw std::invalid_argument("K_n: n must be >= 1");
  if (replicates == 0) throw std::invalid_argument("K_n: replicates must be >= 1");
}

}  // namespace

KnSummary sample_kn(const LengthProcessSpec& spec, std::size_t n, std::size_t replicates, Rng& rng) {
  require_kn_args(n, replicates);
  return to_summary(n, replicates, kn_histogram(spec, n, replicates, rng));
}

KnSummary sample_kn(const LengthProcessSpec& spec, std::size_t n, std::size_t replicates, std::uint64_t seed,
                    unsigned threads) {
  require_kn_args(n, replicates);
  const auto parts = run_chunked<std::vector<std::size_t>>(
      replicates, threads, seed,
      [&](Rng& rng, std::size_t begin, std::size_t end) { return kn_histogram(spec, n, end - begin, rng); });
  std::vector<std::size_t> hist(n + 1, 0);
  for (const auto& h : parts) {
    for (std::size_t k = 0; k <= n; ++k) hist[k] += h[k];
  }
  return to_summary(n, replicates, hist);
}

KnCurve expected_kn_curve(const LengthProcessSpec& spec, std::size_t n_max, std::size_t replicates, Rng& rng) {
  require_kn_args(n_max, replicates);
  return finish_curve(kn_curve_sums(spec, n_max, replicates, rng), replicates);
}

KnCurve expected_kn_curve(const LengthProcessSpec& spec, std::size_t n_max, std::size_t replicates,
                          std::uint64_t seed, unsigned threads) {
  require_kn_args(n_max, replicates);
  const auto parts = run_chunked<CurveSums>(replicates, threads, seed,
                                            [&](Rng& rng, std::size_t begin, std::size_t end) {
                                              return kn_curve_sums(spec, n_max, end - begin, rng);
                                            });
  CurveSums total{std::vector<double>(n_max, 0.0), std::vector<double>(n_max, 0.0)};
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < n_max; ++i) {
      total.sum[i] += p.sum[i];
      total.sum_sq[i] += p.sum_sq[i];
    }
  }
  return finish_curve(total, replicates);
}

double total_variation(const std::map<std::size_t, double>& p, const std::map<std::size_t, double>& q) {
  double acc = 0.0;
  for (const auto& [k, pk] : p) {
    const auto it = q.find(k);
    acc += std::abs(pk - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, qk] : q) {
    if (!p.contains(k)) acc += qk;
  }
  return 0.5 * acc;
}

}  // namespace esbmix
