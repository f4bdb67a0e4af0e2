#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "esbmix/analytics.hpp"
#include "esbmix/eppf.hpp"
#include "esbmix/kernels.hpp"
#include "esbmix/random.hpp"
#include "esbmix/sticks.hpp"

namespace esbmix {

/// Dirichlet-driven lengths whose tie probability rho is itself random with
/// a Unif(lower, upper) prior; beta = (1 - rho)/rho and the base is Be(1, theta).
struct RandomRho {
  double theta = 1.0;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const;
};

using PriorSpec = std::variant<LengthProcessSpec, RandomRho>;

std::string describe(const PriorSpec& prior);

/// Length-process law in force for the given rho (ignored for fixed priors).
LengthProcessSpec current_length_spec(const PriorSpec& prior, std::optional<double> rho);

struct Schedule {
  std::size_t iterations = 10'000;  // total sweeps, burn-in included
  std::size_t burn_in = 2'000;
  std::size_t thin = 4;

  void validate() const;
  /// Sweep s (0-based) is kept iff s >= burn_in and (s - burn_in) % thin == 0.
  bool keeps(std::size_t sweep) const { return sweep >= burn_in && (sweep - burn_in) % thin == 0; }
  std::size_t retained() const { return (iterations - burn_in + thin - 1) / thin; }
};

struct FitConfig {
  PriorSpec prior = LengthProcessSpec::dsb(1.0, 1.0);
  Schedule schedule;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  unsigned threads = 1;
  /// Lengths kept instantiated even when no datum needs them.
  std::size_t min_sticks = 1;
  std::size_t stick_cap = kDefaultStickCap;
  /// Verify every state invariant after each sweep (throws std::logic_error).
  bool check_invariants = false;

  void validate() const;
};

template <class Kernel>
struct GibbsState {
  using Atom = typename Kernel::Atom;

  std::vector<double> u;        // slice variables, one per datum
  std::vector<std::size_t> d;   // 1-based allocations
  LengthPrefix lengths;         // v_1..v_phi with tie structure
  std::vector<double> weights;  // sb_transform(lengths.values())
  std::vector<Atom> atoms;      // xi_1..xi_phi
  std::optional<double> rho;    // present only under RandomRho
  double log_score = -std::numeric_limits<double>::infinity();

  std::size_t phi() const { return lengths.size(); }
  std::size_t max_allocation() const;
  /// Number of distinct values among the allocations (K_n).
  std::size_t occupied() const;
};

struct SweepDiagnostics {
  /// Length updates skipped because rounding left a_j >= b_j.
  std::size_t infeasible_length_updates = 0;
  /// Cluster-value moves that exhausted their shrinkage budget.
  std::size_t stalled_cluster_moves = 0;
  std::size_t sweeps = 0;

  SweepDiagnostics& operator+=(const SweepDiagnostics& other);
};

template <class Kernel>
GibbsState<Kernel> initial_state(std::span<const typename Kernel::Point> data, const Kernel& kernel,
                                 const FitConfig& config, Rng& rng);

/// u_k ~ Unif(0, w_{d_k}).
template <class Kernel>
void update_slices(GibbsState<Kernel>& state, Rng& rng);

/// Drop lengths and atoms beyond max(max d, min_sticks).
template <class Kernel>
void trim_truncation(GibbsState<Kernel>& state, std::size_t min_sticks);

/// Extend lengths (from their conditional prior) and atoms (from the base
/// measure) until sum_{j<=phi} w_j >= max_k (1 - u_k) and phi >= min_sticks.
template <class Kernel>
void extend_truncation(GibbsState<Kernel>& state, const LengthProcessSpec& spec, const Kernel& kernel, Rng& rng,
                       std::size_t min_sticks = 1, std::size_t cap = kDefaultStickCap);

/// Conjugate redraw of xi_j for every j <= phi.
template <class Kernel>
void update_atoms(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data, const Kernel& kernel,
                  Rng& rng);

/// d_k drawn proportionally to G(y_k | xi_j) over {j <= phi : u_k < w_j}.
template <class Kernel>
void update_allocations(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                        const Kernel& kernel, Rng& rng);

/// Single-site update of each v_j from its slice-truncated predictive:
/// tie with an admissible existing value, or a fresh base draw on (a_j, b_j).
/// Returns the number of positions left unchanged because a_j >= b_j.
template <class Kernel>
std::size_t update_lengths(GibbsState<Kernel>& state, const EppfModel& model, double base_a, double base_b,
                           Rng& rng);

/// Moves the common value of every tied group of lengths at once, drawing
/// from the base measure restricted to the slice-feasible set by shrinkage
/// in probability-integral space. Returns the number of stalled moves.
template <class Kernel>
std::size_t update_tied_values(GibbsState<Kernel>& state, double base_a, double base_b, Rng& rng);

/// log of (1-rho)^{K-1} rho^{m-K} / prod_{l=0}^{m-2}(1 + l rho).
double rho_log_conditional(double rho, std::size_t m, std::size_t k);

/// Slice sampling (stepping out on the logit scale of the prior interval,
/// at most 20 steps per side) from the rho full conditional.
double sample_rho(double current, std::size_t m, std::size_t k, const RandomRho& prior, Rng& rng);

template <class Kernel>
void update_rho(GibbsState<Kernel>& state, const RandomRho& prior, Rng& rng);

/// log prod_k G(y_k | xi_{d_k}) 1{u_k < w_{d_k}} + log prior of the atoms and
/// lengths up to max d.
template <class Kernel>
double complete_data_log_score(const GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                               const Kernel& kernel, const PriorSpec& prior);

/// Empty string when every invariant holds, else a description of the first violation.
template <class Kernel>
std::string check_state(const GibbsState<Kernel>& state, std::size_t n_data);

/// slices, trim, extend, lengths, tied values, extend, allocations, atoms, rho.
template <class Kernel>
SweepDiagnostics gibbs_sweep(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                             const Kernel& kernel, const FitConfig& config, Rng& rng);

struct TraceRecord {
  std::size_t chain = 0;
  std::size_t sweep = 0;
  std::size_t k_n = 0;
  std::optional<double> rho;
  double log_score = 0.0;
};

using TraceHook = std::function<void(const TraceRecord&)>;

template <class Kernel>
struct FitResult {
  std::vector<GibbsState<Kernel>> samples;  // retained sweeps, chain-major
  std::vector<TraceRecord> trace;
  SweepDiagnostics diagnostics;
};

/// Runs config.chains chains (chain c seeded by Rng::stream(config.seed, c)),
/// up to config.threads at a time. The hook sees retained sweeps in chain order.
template <class Kernel>
FitResult<Kernel> run_sampler(std::span<const typename Kernel::Point> data, const Kernel& kernel,
                              const FitConfig& config, const TraceHook& hook = {});

/// c_j = n^{-1} sum_k |A_k|^{-1} 1{j in A_k}, A_k = {j : u_k < w_j}.
template <class Kernel>
std::vector<double> component_coefficients(const GibbsState<Kernel>& state);

/// sum_j c_j G(y | xi_j) at each grid point, for a single sample.
template <class Kernel>
std::vector<double> sample_density(const GibbsState<Kernel>& state, const Kernel& kernel,
                                   std::span<const typename Kernel::Point> grid);

/// Average of sample_density over the samples.
template <class Kernel>
std::vector<double> eap_density(std::span<const GibbsState<Kernel>> samples, const Kernel& kernel,
                                std::span<const typename Kernel::Point> grid);

/// Index of the highest log_score; earliest wins ties.
template <class Kernel>
std::size_t map_select(std::span<const GibbsState<Kernel>> samples);

/// c_k = argmax_j c_j G(y_k | xi_j) (smallest j on ties), relabelled 1, 2, ...
/// by first appearance.
template <class Kernel>
std::vector<std::size_t> cluster_assign(const GibbsState<Kernel>& state,
                                        std::span<const typename Kernel::Point> data, const Kernel& kernel);

template <class Kernel>
KnSummary posterior_kn(std::span<const GibbsState<Kernel>> samples);

}  // namespace esbmix
