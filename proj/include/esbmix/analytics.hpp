#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "esbmix/eppf.hpp"
#include "esbmix/partitions.hpp"
#include "esbmix/random.hpp"
#include "esbmix/sticks.hpp"

namespace esbmix {

/// Allocation vector d_1..d_n (1-based component indices) with the derived
/// occupation counts r_i = #{l : d_l = i} and tail counts t_i = #{l : d_l > i},
/// i = 1..k, k = max d.
class AllocationVector {
 public:
  explicit AllocationVector(std::vector<std::size_t> d);

  std::span<const std::size_t> d() const { return d_; }
  std::span<const std::size_t> r() const { return r_; }
  std::span<const std::size_t> t() const { return t_; }
  std::size_t k() const { return r_.size(); }
  std::size_t n() const { return d_.size(); }

 private:
  std::vector<std::size_t> d_;
  std::vector<std::size_t> r_;
  std::vector<std::size_t> t_;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// c(v) = min(1, v / (1 - v)), with c(1) = 1.
double ordering_cutoff(double v);

/// P[w_j >= w_{j+1}] for Dirichlet-driven weights with parameters (beta, theta).
double ordering_probability_dsb(double beta, double theta);

/// rho + (1 - rho) E[F(c(v))], v ~ Be(a, b), F the Be(a, b) cdf. The
/// expectation is exact for a == 1 and Monte Carlo (mc_draws) otherwise.
double ordering_probability_general(const EppfModel& model, double base_a, double base_b,
                                    std::size_t mc_draws, Rng& rng);

/// P[w_j >= w_{j+1} | v_1..v_j] for j = prefix.size(), via prediction-rule ratios.
double conditional_ordering_probability(const LengthPrefix& prefix, const EppfModel& model,
                                        double base_a, double base_b);

/// Closed form of the above for a Dirichlet(beta) EPPF with Be(1, theta) base.
double conditional_ordering_probability_dsb(const LengthPrefix& prefix, double beta, double theta);

/// Monte Carlo frequency of w_j >= w_{j+1}.
McEstimate ordering_probability_mc(const LengthProcessSpec& spec, std::size_t j, std::size_t draws,
                                   Rng& rng);

/// P[d_1..d_n = d] as a sum over set partitions of {1..k} of EPPF values
/// times Beta moments, accumulated in log space.
double allocation_probability(const AllocationVector& d, const EppfModel& model, double base_a,
                              double base_b, EnumerationLimit limit = {});

/// Closed form of the partition sum for Dirichlet(beta) with Be(1, theta) base.
double allocation_probability_dsb(const AllocationVector& d, double beta, double theta,
                                  EnumerationLimit limit = {});

/// Rao-Blackwellised estimate E[prod_j w_j^{r_j}] from simulated length
/// prefixes. Serves as the fallback above the partition cap.
McEstimate allocation_probability_mc(const AllocationVector& d, const LengthProcessSpec& spec,
                                     std::size_t replicates, Rng& rng);

/// Assign each uniform u_k to the stick whose partial-sum interval holds it,
/// generating sticks from spec as needed. Sticks are streamed rather than
/// stored; runs of tied lengths are skipped in closed form.
std::vector<std::size_t> allocate_uniforms(const LengthProcessSpec& spec, std::span<const double> u,
                                           Rng& rng);

struct KnSummary {
  std::size_t n = 0;
  std::map<std::size_t, double> pmf;
  std::size_t replicates = 0;

  double mean() const;
};

KnSummary sample_kn(const LengthProcessSpec& spec, std::size_t n, std::size_t replicates, Rng& rng);
KnSummary sample_kn(const LengthProcessSpec& spec, std::size_t n, std::size_t replicates,
                    std::uint64_t seed, unsigned threads);

struct KnCurve {
  std::vector<double> mean;       // mean[n-1] estimates E[K_n]
  std::vector<double> std_error;  // Monte Carlo standard error of mean[n-1]
};

/// E[K_n] for n = 1..n_max; one growing sample per replicate so every
/// replicate's K_n path is monotone.
KnCurve expected_kn_curve(const LengthProcessSpec& spec, std::size_t n_max, std::size_t replicates,
                          Rng& rng);
KnCurve expected_kn_curve(const LengthProcessSpec& spec, std::size_t n_max, std::size_t replicates,
                          std::uint64_t seed, unsigned threads);

/// Total variation distance between two pmfs on the integers.
double total_variation(const std::map<std::size_t, double>& p, const std::map<std::size_t, double>& q);

}  // namespace esbmix
