#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "esbmix/eppf.hpp"
#include "esbmix/kernels.hpp"
#include "esbmix/mcmc.hpp"
#include "esbmix/sticks.hpp"

namespace esbmix::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict reader for one JSON object: every key must be consumed before
/// finish(), so misspelled keys fail loudly.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path);

  bool has(const std::string& key) const;
  const json& raw(const std::string& key);
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::uint64_t unsigned_integer(const std::string& key);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string child_path(const std::string& key) const { return path_ + "." + key; }

  void finish() const;

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

json load_json_file(const std::string& path);

/// Parameter value that may also be spelled as a limit: "geometric" (beta -> 0)
/// or "dirichlet" (beta -> infinity).
struct BetaValue {
  enum class Kind { finite, geometric, dirichlet } kind = Kind::finite;
  double value = 0.0;
};
BetaValue parse_beta_value(const json& j, const std::string& path);

struct NamedPrior {
  std::string label;
  PriorSpec prior;
};

EppfModel parse_eppf(const json& j, const std::string& path);
/// Families: dsb, geometric, dirichlet, iid_beta, shared_beta, pitman_yor,
/// species, and (only when allow_random_rho) random_rho.
NamedPrior parse_prior(const json& j, const std::string& path, bool allow_random_rho);
std::vector<NamedPrior> parse_prior_list(const json& j, const std::string& path);
LengthProcessSpec require_fixed(const NamedPrior& p, const std::string& path);

struct PriorKnConfig {
  std::optional<std::uint64_t> seed;
  std::size_t n = 20;
  std::size_t replicates = 10'000;
  std::vector<NamedPrior> priors;
};
PriorKnConfig parse_prior_kn(const json& j);

struct PriorEknConfig {
  std::optional<std::uint64_t> seed;
  std::size_t n_max = 200;
  std::size_t replicates = 10'000;
  std::vector<NamedPrior> priors;
};
PriorEknConfig parse_prior_ekn(const json& j);

struct OrderProbConfig {
  std::optional<std::uint64_t> seed;
  std::vector<BetaValue> betas;
  std::vector<double> thetas;
  std::size_t j = 1;
  std::size_t mc_draws = 1'000'000;
};
OrderProbConfig parse_order_prob(const json& j);

struct AllocProbConfig {
  std::optional<std::uint64_t> seed;
  NamedPrior prior{"dsb", LengthProcessSpec::dsb(1.0, 1.0)};
  std::vector<std::vector<std::size_t>> d;
  std::size_t mc_replicates = 100'000;
  std::size_t max_k = 12;
};
AllocProbConfig parse_alloc_prob(const json& j);

struct GridSpec {
  std::optional<std::vector<double>> lower, upper;
  std::vector<std::size_t> points;
};

struct KernelSpec {
  enum class Type { automatic, normal_gamma, normal_inv_wishart } type = Type::automatic;
  std::optional<std::vector<double>> mu0;  // defaults to the sample mean
  double lambda = 0.01;
  double a = 0.5, b = 0.5;                 // Normal-Gamma
  std::vector<double> psi{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  double nu = 2.0;
};

struct FitFileConfig {
  std::optional<std::uint64_t> seed;
  NamedPrior prior{"dsb", LengthProcessSpec::dsb(1.0, 1.0)};
  KernelSpec kernel;
  Schedule schedule;
  std::size_t chains = 1;
  std::size_t min_sticks = 1;
  bool check_invariants = true;
  GridSpec grid;
  std::optional<std::string> data;
  std::optional<bool> header;
  std::size_t rho_bins = 20;
};
FitFileConfig parse_fit(const json& j);

}  // namespace esbmix::cli
