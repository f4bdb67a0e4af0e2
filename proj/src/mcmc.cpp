#include "esbmix/mcmc.hpp"

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "esbmix/numerics.hpp"
#include "esbmix/partitions.hpp"

namespace esbmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Base-measure survival 1 - F(x) of Be(a, b), exact in the upper tail for a == 1.
double base_survival(double x, double a, double b) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  if (a == 1.0) return std::exp(b * std::log1p(-x));
  return 1.0 - numerics::beta_cdf(x, a, b);
}

double base_survival_inverse(double s, double a, double b) {
  if (s >= 1.0) return 0.0;
  if (s <= 0.0) return 1.0;
  if (a == 1.0) return -std::expm1(std::log(s) / b);
  return numerics::beta_quantile(1.0 - s, a, b);
}

// Largest u_k per stick (0 where unoccupied), sized phi.
std::vector<double> max_slice_per_stick(std::span<const double> u, std::span<const std::size_t> d,
                                        std::size_t phi) {
  std::vector<double> out(phi, 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) out[d[k] - 1] = std::max(out[d[k] - 1], u[k]);
  return out;
}

std::vector<char> occupied_sticks(std::span<const std::size_t> d, std::size_t phi) {
  std::vector<char> out(phi, 0);
  for (std::size_t x : d) out[x - 1] = 1;
  return out;
}

double min_slice(std::span<const double> u) {
  double m = 1.0;
  for (double x : u) m = std::min(m, x);
  return m;
}

template <class Kernel>
void refresh_weights(GibbsState<Kernel>& state) {
  state.weights = sb_transform(state.lengths.values());
}

}  // namespace

// --- configuration --------------------------------------------------------------

void RandomRho::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("RandomRho: theta must be finite and > 0");
  if (!(lower >= 0.0 && lower < upper && upper <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("RandomRho: need 0 <= lower < upper <= 1 (got lower={}, upper={})", lower, upper));
  }
}

std::string describe(const PriorSpec& prior) {
  return std::visit(overloaded{[](const LengthProcessSpec& s) { return s.describe(); },
                               [](const RandomRho& r) {
                                 return fmt::format("random_rho(theta={}, rho~Unif({}, {}))", r.theta, r.lower,
                                                    r.upper);
                               }},
                    prior);
}

LengthProcessSpec current_length_spec(const PriorSpec& prior, std::optional<double> rho) {
  return std::visit(overloaded{[](const LengthProcessSpec& s) { return s; },
                               [&](const RandomRho& r) {
                                 if (!rho) throw std::logic_error("current_length_spec: random rho is unset");
                                 return LengthProcessSpec::species_driven(EppfModel::dirichlet_from_tie(*rho), 1.0,
                                                                          r.theta);
                               }},
                    prior);
}

void Schedule::validate() const {
  if (thin < 1) throw std::invalid_argument("Schedule: thin must be >= 1");
  if (!(burn_in < iterations)) {
    throw std::invalid_argument(
        fmt::format("Schedule: burn_in ({}) must be smaller than iterations ({})", burn_in, iterations));
  }
}

void FitConfig::validate() const {
  schedule.validate();
  if (const auto* r = std::get_if<RandomRho>(&prior)) r->validate();
  if (chains < 1) throw std::invalid_argument("FitConfig: chains must be >= 1");
  if (min_sticks < 1) throw std::invalid_argument("FitConfig: min_sticks must be >= 1");
  if (stick_cap < min_sticks) throw std::invalid_argument("FitConfig: stick_cap must be >= min_sticks");
}

SweepDiagnostics& SweepDiagnostics::operator+=(const SweepDiagnostics& other) {
  infeasible_length_updates += other.infeasible_length_updates;
  stalled_cluster_moves += other.stalled_cluster_moves;
  sweeps += other.sweeps;
  return *this;
}

template <class Kernel>
std::size_t GibbsState<Kernel>::max_allocation() const {
  std::size_t m = 0;
  for (std::size_t x : d) m = std::max(m, x);
  return m;
}

template <class Kernel>
std::size_t GibbsState<Kernel>::occupied() const {
  std::vector<char> seen(max_allocation(), 0);
  std::size_t count = 0;
  for (std::size_t x : d) {
    if (!seen[x - 1]) {
      seen[x - 1] = 1;
      ++count;
    }
  }
  return count;
}

// --- state construction and truncation ------------------------------------------------

template <class Kernel>
GibbsState<Kernel> initial_state(std::span<const typename Kernel::Point> data, const Kernel& kernel,
                                 const FitConfig& config, Rng& rng) {
  config.validate();
  kernel.validate();
  GibbsState<Kernel> state;
  if (const auto* r = std::get_if<RandomRho>(&config.prior)) {
    do {
      state.rho = rng.uniform(r->lower, r->upper);
    } while (!(*state.rho > 0.0 && *state.rho < 1.0));
  }
  const auto spec = current_length_spec(config.prior, state.rho);
  state.lengths = sample_lengths_prefix(spec, config.min_sticks, rng);
  refresh_weights(state);
  for (std::size_t j = 0; j < state.phi(); ++j) state.atoms.push_back(kernel.sample_prior(rng));
  state.d.assign(data.size(), 1);
  state.u.resize(data.size());
  update_slices(state, rng);
  extend_truncation(state, spec, kernel, rng, config.min_sticks, config.stick_cap);
  state.log_score = complete_data_log_score(state, data, kernel, config.prior);
  return state;
}

template <class Kernel>
void update_slices(GibbsState<Kernel>& state, Rng& rng) {
  for (std::size_t k = 0; k < state.u.size(); ++k) {
    const double w = state.weights.at(state.d[k] - 1);
    if (!(w > 0.0)) throw std::logic_error(fmt::format("update_slices: datum {} sits on a zero weight", k));
    state.u[k] = rng.uniform(0.0, w);
  }
}

template <class Kernel>
void trim_truncation(GibbsState<Kernel>& state, std::size_t min_sticks) {
  const std::size_t keep = std::max(state.max_allocation(), min_sticks);
  if (keep >= state.phi()) return;
  state.lengths.truncate(keep);
  state.atoms.resize(keep);
  state.weights.resize(keep);
}

template <class Kernel>
void extend_truncation(GibbsState<Kernel>& state, const LengthProcessSpec& spec, const Kernel& kernel, Rng& rng,
                       std::size_t min_sticks, std::size_t cap) {
  const double threshold = 1.0 - min_slice(state.u);
  auto extended = extend_weights_until(std::move(state.lengths), spec, threshold, rng, cap);
  state.lengths = std::move(extended.prefix);
  while (state.lengths.size() < min_sticks) append_length(state.lengths, spec, rng);
  refresh_weights(state);
  while (state.atoms.size() < state.phi()) state.atoms.push_back(kernel.sample_prior(rng));
}

// --- conditional updates --------------------------------------------------------------

template <class Kernel>
void update_atoms(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data, const Kernel& kernel,
                  Rng& rng) {
  using Point = typename Kernel::Point;
  std::vector<std::vector<Point>> groups(state.phi());
  for (std::size_t k = 0; k < data.size(); ++k) groups.at(state.d[k] - 1).push_back(data[k]);
  for (std::size_t j = 0; j < state.phi(); ++j) state.atoms[j] = kernel.sample_posterior(groups[j], rng);
}

template <class Kernel>
void update_allocations(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                        const Kernel& kernel, Rng& rng) {
  std::vector<double> log_w;
  std::vector<std::size_t> index;
  for (std::size_t k = 0; k < data.size(); ++k) {
    log_w.clear();
    index.clear();
    for (std::size_t j = 0; j < state.phi(); ++j) {
      if (state.u[k] < state.weights[j]) {
        log_w.push_back(kernel.log_density(data[k], state.atoms[j]));
        index.push_back(j);
      }
    }
    if (index.empty()) {
      throw std::logic_error(fmt::format("update_allocations: no admissible component for datum {}", k));
    }
    const std::size_t pick = rng.categorical_log(log_w);
    if (pick >= index.size()) {
      // Every admissible component has zero likelihood; keep the current one.
      continue;
    }
    state.d[k] = index[pick] + 1;
  }
}

template <class Kernel>
std::size_t update_lengths(GibbsState<Kernel>& state, const EppfModel& model, double base_a, double base_b,
                           Rng& rng) {
  LengthPrefix& lengths = state.lengths;
  const std::size_t phi = lengths.size();
  const auto max_u = max_slice_per_stick(state.u, state.d, phi);
  const auto occ = occupied_sticks(state.d, phi);
  std::size_t infeasible = 0;
  std::vector<std::size_t> live_slots, live_counts;
  std::vector<double> choice_w;

  for (std::size_t j = 0; j < phi; ++j) {
    const auto v = lengths.values();
    double lower = 0.0;
    if (occ[j]) {
      double remaining = 1.0;
      for (std::size_t i = 0; i < j; ++i) remaining *= 1.0 - v[i];
      lower = remaining > 0.0 ? max_u[j] / remaining : 1.0;
    }
    double inner = 0.0;
    double remaining_excl = 1.0;
    for (std::size_t i = 0; i < phi; ++i) {
      if (i > j && occ[i]) {
        const double denom = v[i] * remaining_excl;
        inner = std::max(inner, denom > 0.0 ? max_u[i] / denom : 1.0);
      }
      if (i != j) remaining_excl *= 1.0 - v[i];
    }
    lower = std::clamp(lower, 0.0, 1.0);
    const double upper = 1.0 - std::clamp(inner, 0.0, 1.0);
    if (!(lower < upper)) {
      ++infeasible;
      continue;
    }

    const std::size_t own = lengths.atom_index()[j];
    live_slots.clear();
    live_counts.clear();
    for (std::size_t s = 0; s < lengths.num_distinct(); ++s) {
      const std::size_t c = lengths.counts()[s] - (s == own ? 1 : 0);
      if (c > 0) {
        live_slots.push_back(s);
        live_counts.push_back(c);
      }
    }
    const auto pw = prediction_weights(model, live_counts);
    choice_w.clear();
    for (std::size_t i = 0; i < live_slots.size(); ++i) {
      const double value = lengths.distinct()[live_slots[i]];
      choice_w.push_back(lower < value && value < upper ? pw.existing[i] : 0.0);
    }
    const double s_lower = base_survival(lower, base_a, base_b);
    const double s_upper = base_survival(upper, base_a, base_b);
    choice_w.push_back(pw.fresh * std::max(0.0, s_lower - s_upper));

    const std::size_t pick = rng.categorical(choice_w);
    if (pick >= choice_w.size()) {
      ++infeasible;
      continue;
    }
    if (pick < live_slots.size()) {
      lengths.assign_existing(j, live_slots[pick]);
      continue;
    }
    double fresh = base_survival_inverse(s_upper + rng.uniform() * (s_lower - s_upper), base_a, base_b);
    if (!(fresh > lower && fresh < upper)) {
      fresh = std::clamp(fresh, std::nextafter(lower, 1.0), std::nextafter(upper, 0.0));
    }
    if (!(fresh > lower && fresh < upper)) {
      ++infeasible;
      continue;
    }
    lengths.assign_new(j, fresh);
  }
  refresh_weights(state);
  return infeasible;
}

template <class Kernel>
std::size_t update_tied_values(GibbsState<Kernel>& state, double base_a, double base_b, Rng& rng) {
  constexpr int kMaxShrink = 200;
  LengthPrefix& lengths = state.lengths;
  const std::size_t phi = lengths.size();
  const auto max_u = max_slice_per_stick(state.u, state.d, phi);
  const auto occ = occupied_sticks(state.d, phi);
  std::size_t last_occupied = 0;
  for (std::size_t i = 0; i < phi; ++i) {
    if (occ[i]) last_occupied = i + 1;
  }
  std::size_t stalled = 0;

  auto feasible = [&](std::size_t slot, double value) {
    if (!(value > 0.0 && value < 1.0)) return false;
    for (std::size_t s = 0; s < lengths.num_distinct(); ++s) {
      if (s != slot && lengths.distinct()[s] == value) return false;
    }
    double remaining = 1.0;
    const auto v = lengths.values();
    const auto idx = lengths.atom_index();
    for (std::size_t i = 0; i < last_occupied; ++i) {
      const double vi = idx[i] == slot ? value : v[i];
      if (occ[i] && !(max_u[i] < vi * remaining)) return false;
      remaining *= 1.0 - vi;
    }
    return true;
  };

  for (std::size_t slot = 0; slot < lengths.num_distinct(); ++slot) {
    if (lengths.counts()[slot] < 2) continue;
    // Uniform target on the feasible set in x = 1 - S(v) coordinates; shrink
    // towards the current point, which is always feasible.
    const double x0 = 1.0 - base_survival(lengths.distinct()[slot], base_a, base_b);
    double lo = 0.0, hi = 1.0;
    bool moved = false;
    for (int attempt = 0; attempt < kMaxShrink; ++attempt) {
      const double x = rng.uniform(lo, hi);
      const double value = base_survival_inverse(1.0 - x, base_a, base_b);
      if (feasible(slot, value)) {
        lengths.set_distinct_value(slot, value);
        moved = true;
        break;
      }
      if (x < x0) {
        lo = x;
      } else {
        hi = x;
      }
    }
    if (!moved) ++stalled;
  }
  refresh_weights(state);
  return stalled;
}

double rho_log_conditional(double rho, std::size_t m, std::size_t k) {
  if (!(rho > 0.0 && rho < 1.0)) return kNegInf;
  if (k < 1 || k > m) throw std::invalid_argument("rho_log_conditional: need 1 <= k <= m");
  double out = 0.0;
  if (k > 1) out += static_cast<double>(k - 1) * std::log1p(-rho);
  if (m > k) out += static_cast<double>(m - k) * std::log(rho);
  for (std::size_t l = 1; l + 1 < m; ++l) out -= std::log1p(static_cast<double>(l) * rho);
  return out;
}

double sample_rho(double current, std::size_t m, std::size_t k, const RandomRho& prior, Rng& rng) {
  constexpr double kWidth = 2.0;
  constexpr int kMaxSteps = 20;
  const double span = prior.upper - prior.lower;
  auto to_rho = [&](double eta) { return prior.lower + span / (1.0 + std::exp(-eta)); };
  auto log_f = [&](double eta) {
    const double rho = to_rho(eta);
    if (!(rho > prior.lower && rho < prior.upper)) return kNegInf;
    // Jacobian of the logistic map: sigma(eta) sigma(-eta).
    const double log_jac = -std::log1p(std::exp(-eta)) - std::log1p(std::exp(eta));
    return rho_log_conditional(rho, m, k) + log_jac;
  };
  const double p0 = std::clamp((current - prior.lower) / span, 1e-300, 1.0 - 1e-16);
  const double eta0 = std::log(p0) - std::log1p(-p0);
  const double f0 = log_f(eta0);
  if (f0 == kNegInf) throw std::logic_error("sample_rho: current rho has zero density");
  const double level = f0 + std::log(rng.uniform());

  double left = eta0 - kWidth * rng.uniform();
  double right = left + kWidth;
  int steps_left = static_cast<int>(std::floor(kMaxSteps * rng.uniform()));
  int steps_right = kMaxSteps - 1 - steps_left;
  while (steps_left-- > 0 && log_f(left) > level) left -= kWidth;
  while (steps_right-- > 0 && log_f(right) > level) right += kWidth;

  for (;;) {
    const double eta = rng.uniform(left, right);
    if (log_f(eta) > level) return to_rho(eta);
    if (eta < eta0) {
      left = eta;
    } else {
      right = eta;
    }
    if (right - left < 1e-14) return current;
  }
}

template <class Kernel>
void update_rho(GibbsState<Kernel>& state, const RandomRho& prior, Rng& rng) {
  if (!state.rho) throw std::logic_error("update_rho: state carries no rho");
  state.rho = sample_rho(*state.rho, state.lengths.size(), state.lengths.num_distinct(), prior, rng);
}

// --- scoring and checks ------------------------------------------------------------------

template <class Kernel>
double complete_data_log_score(const GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                               const Kernel& kernel, const PriorSpec& prior) {
  double score = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const std::size_t j = state.d[k] - 1;
    if (!(state.u[k] < state.weights[j])) return kNegInf;
    score += kernel.log_density(data[k], state.atoms[j]);
  }
  const std::size_t top = state.max_allocation();
  if (top == 0) return score;
  for (std::size_t j = 0; j < top; ++j) score += kernel.log_prior(state.atoms[j]);

  const auto spec = current_length_spec(prior, state.rho);
  const auto slots = state.lengths.atom_index().subspan(0, top);
  const auto blocks = partition_of(slots).block_sizes();
  score += log_eppf(spec.tie_model(), blocks);
  std::vector<std::size_t> seen;
  for (std::size_t s : slots) {
    if (std::find(seen.begin(), seen.end(), s) != seen.end()) continue;
    seen.push_back(s);
    score += numerics::beta_log_pdf(state.lengths.distinct()[s], spec.base_a(), spec.base_b());
  }
  return score;
}

template <class Kernel>
std::string check_state(const GibbsState<Kernel>& state, std::size_t n_data) {
  if (state.u.size() != n_data || state.d.size() != n_data) return "slice/allocation count differs from data size";
  if (state.atoms.size() != state.phi()) return fmt::format("{} atoms for {} lengths", state.atoms.size(), state.phi());
  if (!state.lengths.is_consistent()) return "length tie bookkeeping is inconsistent";
  const auto w = sb_transform(state.lengths.values());
  if (w.size() != state.weights.size()) return "cached weights have the wrong length";
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (std::abs(w[j] - state.weights[j]) > 1e-12) return fmt::format("cached weight {} is stale", j + 1);
    total += w[j];
  }
  for (std::size_t k = 0; k < n_data; ++k) {
    if (state.d[k] < 1 || state.d[k] > state.phi()) return fmt::format("allocation of datum {} out of range", k);
    if (!(state.u[k] < state.weights[state.d[k] - 1])) return fmt::format("slice of datum {} exceeds its weight", k);
  }
  const double threshold = 1.0 - min_slice(state.u);
  double residual = 1.0;
  for (double v : state.lengths.values()) residual *= 1.0 - v;
  if (total < threshold - 1e-12 && residual > 1.0 - threshold + 1e-12) {
    return fmt::format("truncation covers {} < {}", total, threshold);
  }
  return {};
}

// --- sweep and chains -------------------------------------------------------------------

template <class Kernel>
SweepDiagnostics gibbs_sweep(GibbsState<Kernel>& state, std::span<const typename Kernel::Point> data,
                             const Kernel& kernel, const FitConfig& config, Rng& rng) {
  SweepDiagnostics diag;
  diag.sweeps = 1;
  auto spec = current_length_spec(config.prior, state.rho);

  update_slices(state, rng);
  // Lengths are updated on the trimmed prefix only: its size does not depend
  // on the lengths, whereas the extended truncation level does.
  trim_truncation(state, config.min_sticks);
  diag.infeasible_length_updates += update_lengths(state, spec.tie_model(), spec.base_a(), spec.base_b(), rng);
  diag.stalled_cluster_moves += update_tied_values(state, spec.base_a(), spec.base_b(), rng);
  extend_truncation(state, spec, kernel, rng, config.min_sticks, config.stick_cap);
  update_allocations(state, data, kernel, rng);
  update_atoms(state, data, kernel, rng);
  if (const auto* r = std::get_if<RandomRho>(&config.prior)) update_rho(state, *r, rng);

  state.log_score = complete_data_log_score(state, data, kernel, config.prior);
  if (config.check_invariants) {
    const auto problem = check_state(state, data.size());
    if (!problem.empty()) throw std::logic_error("gibbs_sweep: " + problem);
  }
  return diag;
}

template <class Kernel>
FitResult<Kernel> run_sampler(std::span<const typename Kernel::Point> data, const Kernel& kernel,
                              const FitConfig& config, const TraceHook& hook) {
  config.validate();
  kernel.validate();
  const std::size_t chains = config.chains;
  std::vector<FitResult<Kernel>> per_chain(chains);
  std::vector<std::exception_ptr> errors(chains);
  const bool live_hook = static_cast<bool>(hook) && (config.threads <= 1 || chains == 1);

  auto run_one = [&](std::size_t c) {
    try {
      Rng rng = Rng::stream(config.seed, c);
      auto& out = per_chain[c];
      auto state = initial_state(data, kernel, config, rng);
      out.samples.reserve(config.schedule.retained());
      for (std::size_t sweep = 0; sweep < config.schedule.iterations; ++sweep) {
        out.diagnostics += gibbs_sweep(state, data, kernel, config, rng);
        if (!config.schedule.keeps(sweep)) continue;
        TraceRecord rec{c, sweep, state.occupied(), state.rho, state.log_score};
        if (live_hook) hook(rec);
        out.trace.push_back(rec);
        out.samples.push_back(state);
      }
      spdlog::debug("chain {} done: {} sweeps, {} infeasible length updates, {} stalled tied moves", c,
                    out.diagnostics.sweeps, out.diagnostics.infeasible_length_updates,
                    out.diagnostics.stalled_cluster_moves);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, chains);
  for (std::size_t first = 0; first < chains; first += workers) {
    const std::size_t last = std::min(chains, first + workers);
    if (last - first == 1) {
      run_one(first);
      continue;
    }
    std::vector<std::thread> pool;
    for (std::size_t c = first; c < last; ++c) pool.emplace_back(run_one, c);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  FitResult<Kernel> merged;
  for (auto& part : per_chain) {
    for (auto& rec : part.trace) {
      if (hook && !live_hook) hook(rec);
      merged.trace.push_back(rec);
    }
    std::move(part.samples.begin(), part.samples.end(), std::back_inserter(merged.samples));
    merged.diagnostics += part.diagnostics;
  }
  return merged;
}

// --- estimators ------------------------------------------------------------------------

template <class Kernel>
std::vector<double> component_coefficients(const GibbsState<Kernel>& state) {
  const std::size_t n = state.u.size();
  std::vector<double> c(state.phi(), 0.0);
  if (n == 0) throw std::invalid_argument("component_coefficients: state holds no data");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t size = 0;
    for (double w : state.weights) size += state.u[k] < w ? 1 : 0;
    if (size == 0) throw std::logic_error(fmt::format("component_coefficients: empty A_k for datum {}", k));
    const double share = 1.0 / (static_cast<double>(n) * static_cast<double>(size));
    for (std::size_t j = 0; j < state.phi(); ++j) {
      if (state.u[k] < state.weights[j]) c[j] += share;
    }
  }
  return c;
}

template <class Kernel>
std::vector<double> sample_density(const GibbsState<Kernel>& state, const Kernel& kernel,
                                   std::span<const typename Kernel::Point> grid) {
  const auto c = component_coefficients(state);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0.0) continue;
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] += c[j] * std::exp(kernel.log_density(grid[g], state.atoms[j]));
  }
  return out;
}

template <class Kernel>
std::vector<double> eap_density(std::span<const GibbsState<Kernel>> samples, const Kernel& kernel,
                                std::span<const typename Kernel::Point> grid) {
  if (samples.empty()) throw std::invalid_argument("eap_density: no samples");
  std::vector<double> out(grid.size(), 0.0);
  for (const auto& s : samples) {
    const auto f = sample_density(s, kernel, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] += f[g];
  }
  for (double& x : out) x /= static_cast<double>(samples.size());
  return out;
}

template <class Kernel>
std::size_t map_select(std::span<const GibbsState<Kernel>> samples) {
  if (samples.empty()) throw std::invalid_argument("map_select: no samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].log_score > samples[best].log_score) best = i;
  }
  return best;
}

template <class Kernel>
std::vector<std::size_t> cluster_assign(const GibbsState<Kernel>& state,
                                        std::span<const typename Kernel::Point> data, const Kernel& kernel) {
  const auto c = component_coefficients(state);
  std::vector<std::size_t> raw(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    double best = kNegInf;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (c[j] == 0.0) continue;
      const double score = std::log(c[j]) + kernel.log_density(data[k], state.atoms[j]);
      if (score > best) {
        best = score;
        arg = j;
      }
    }
    raw[k] = arg;
  }
  std::vector<std::size_t> relabel(c.size(), 0);
  std::size_t next = 0;
  std::vector<std::size_t> out(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (relabel[raw[k]] == 0) relabel[raw[k]] = ++next;
    out[k] = relabel[raw[k]];
  }
  return out;
}

template <class Kernel>
KnSummary posterior_kn(std::span<const GibbsState<Kernel>> samples) {
  if (samples.empty()) throw std::invalid_argument("posterior_kn: no samples");
  KnSummary out;
  out.n = samples.front().d.size();
  out.replicates = samples.size();
  for (const auto& s : samples) out.pmf[s.occupied()] += 1.0;
  for (auto& [k, p] : out.pmf) p /= static_cast<double>(samples.size());
  return out;
}

// --- instantiations -------------------------------------------------------------------

#define ESBMIX_INSTANTIATE(K)                                                                                   \
  template struct GibbsState<K>;                                                                               \
  template GibbsState<K> initial_state<K>(std::span<const K::Point>, const K&, const FitConfig&, Rng&);        \
  template void update_slices<K>(GibbsState<K>&, Rng&);                                                        \
  template void trim_truncation<K>(GibbsState<K>&, std::size_t);                                               \
  template void extend_truncation<K>(GibbsState<K>&, const LengthProcessSpec&, const K&, Rng&, std::size_t,    \
                                     std::size_t);                                                             \
  template void update_atoms<K>(GibbsState<K>&, std::span<const K::Point>, const K&, Rng&);                    \
  template void update_allocations<K>(GibbsState<K>&, std::span<const K::Point>, const K&, Rng&);              \
  template std::size_t update_lengths<K>(GibbsState<K>&, const EppfModel&, double, double, Rng&);              \
  template std::size_t update_tied_values<K>(GibbsState<K>&, double, double, Rng&);                            \
  template void update_rho<K>(GibbsState<K>&, const RandomRho&, Rng&);                                         \
  template double complete_data_log_score<K>(const GibbsState<K>&, std::span<const K::Point>, const K&,        \
                                             const PriorSpec&);                                                \
  template std::string check_state<K>(const GibbsState<K>&, std::size_t);                                      \
  template SweepDiagnostics gibbs_sweep<K>(GibbsState<K>&, std::span<const K::Point>, const K&,                \
                                           const FitConfig&, Rng&);                                            \
  template FitResult<K> run_sampler<K>(std::span<const K::Point>, const K&, const FitConfig&, const TraceHook&); \
  template std::vector<double> component_coefficients<K>(const GibbsState<K>&);                                \
  template std::vector<double> sample_density<K>(const GibbsState<K>&, const K&, std::span<const K::Point>);   \
  template std::vector<double> eap_density<K>(std::span<const GibbsState<K>>, const K&,                        \
                                              std::span<const K::Point>);                                      \
  template std::size_t map_select<K>(std::span<const GibbsState<K>>);                                          \
  template std::vector<std::size_t> cluster_assign<K>(const GibbsState<K>&, std::span<const K::Point>,         \
                                                      const K&);                                               \
  template KnSummary posterior_kn<K>(std::span<const GibbsState<K>>);

ESBMIX_INSTANTIATE(NormalGammaKernel)
ESBMIX_INSTANTIATE(NormalInvWishartKernel)

#undef ESBMIX_INSTANTIATE

}  // namespace esbmix
