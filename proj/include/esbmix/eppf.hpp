#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace esbmix {

/// Exchangeable partition probability functions of the directing process
/// of the length variables.
class EppfModel {
 public:
  struct Dirichlet {
    double beta;
  };
  struct PitmanYor {
    double alpha;
    double beta;
  };
  /// Every draw distinct: pi(1,...,1) = 1.
  struct IidDegenerate {};
  /// Every draw identical: pi(n) = 1.
  struct IdenticalDegenerate {};

  using Variant = std::variant<Dirichlet, PitmanYor, IidDegenerate, IdenticalDegenerate>;

  static EppfModel dirichlet(double beta);
  static EppfModel pitman_yor(double alpha, double beta);
  static EppfModel iid() { return EppfModel(IidDegenerate{}); }
  static EppfModel identical() { return EppfModel(IdenticalDegenerate{}); }
  /// Dirichlet with beta = (1 - rho) / rho; rho in (0, 1).
  static EppfModel dirichlet_from_tie(double rho);

  const Variant& variant() const { return variant_; }
  std::string describe() const;

 private:
  explicit EppfModel(Variant v) : variant_(v) {}
  Variant variant_;
};

/// log pi(sizes); -inf where the law puts no mass (degenerate variants).
double log_eppf(const EppfModel& model, std::span<const std::size_t> sizes);
double eppf(const EppfModel& model, std::span<const std::size_t> sizes);

/// |pi(n) - pi(n, 1) - sum_j pi(n + e_j)|.
double check_addition_rule(const EppfModel& model, std::span<const std::size_t> sizes);

/// rho = pi(2), the probability that two draws coincide.
double tie_probability(const EppfModel& model);

/// Tie probability of the normalized inverse-Gaussian process with total
/// mass beta: (1 + beta^2 e^beta E1(beta) - beta) / 2.
double nig_tie_probability(double beta);

struct PredictionWeights {
  std::vector<double> existing;
  double fresh = 1.0;
};

/// pi(n + e_j)/pi(n) for each occupied slot j and pi(n, 1)/pi(n) for a new
/// value, in closed form per family. counts may be empty.
PredictionWeights prediction_weights(const EppfModel& model, std::span<const std::size_t> counts);

}  // namespace esbmix
