#include "esbmix/eppf.hpp"

#include <fmt/core.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "esbmix/numerics.hpp"

namespace esbmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_sizes(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("EPPF sizes must be nonempty");
  for (std::size_t s : sizes) {
    if (s == 0) throw std::invalid_argument("EPPF sizes must all be >= 1");
  }
}

double log_dirichlet(double beta, std::span<const std::size_t> sizes) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  double out = static_cast<double>(sizes.size()) * std::log(beta) -
               numerics::log_rising_factorial(beta, n, 1.0);
  for (std::size_t s : sizes) out += std::lgamma(static_cast<double>(s));
  return out;
}

double log_pitman_yor(double alpha, double beta, std::span<const std::size_t> sizes) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::size_t k = sizes.size();
  double out = numerics::log_rising_factorial(beta + alpha, k - 1, alpha) -
               numerics::log_rising_factorial(beta + 1.0, n - 1, 1.0);
  for (std::size_t s : sizes) out += numerics::log_rising_factorial(1.0 - alpha, s - 1, 1.0);
  return out;
}

}  // namespace

EppfModel EppfModel::dirichlet(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument(fmt::format("Dirichlet EPPF needs finite beta > 0, got {}", beta));
  }
  return EppfModel(Dirichlet{beta});
}

EppfModel EppfModel::pitman_yor(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(fmt::format("Pitman-Yor EPPF needs alpha in [0,1), got {}", alpha));
  }
  if (!(beta > -alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument(fmt::format("Pitman-Yor EPPF needs beta > -alpha, got {}", beta));
  }
  return EppfModel(PitmanYor{alpha, beta});
}

EppfModel EppfModel::dirichlet_from_tie(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument(fmt::format("tie probability must be in (0,1), got {}", rho));
  }
  return dirichlet((1.0 - rho) / rho);
}

std::string EppfModel::describe() const {
  return std::visit(overloaded{
                        [](const Dirichlet& d) { return fmt::format("dirichlet(beta={})", d.beta); },
                        [](const PitmanYor& p) {
                          return fmt::format("pitman_yor(alpha={}, beta={})", p.alpha, p.beta);
                        },
                        [](const IidDegenerate&) { return std::string("iid"); },
                        [](const IdenticalDegenerate&) { return std::string("identical"); },
                    },
                    variant_);
}

double log_eppf(const EppfModel& model, std::span<const std::size_t> sizes) {
  require_sizes(sizes);
  return std::visit(
      overloaded{
          [&](const EppfModel::Dirichlet& d) { return log_dirichlet(d.beta, sizes); },
          [&](const EppfModel::PitmanYor& p) {
            // alpha = 0 is the Dirichlet law; route it there so both agree exactly.
            if (p.alpha == 0.0) return log_dirichlet(p.beta, sizes);
            return log_pitman_yor(p.alpha, p.beta, sizes);
          },
          [&](const EppfModel::IidDegenerate&) {
            for (std::size_t s : sizes) {
              if (s != 1) return kNegInf;
            }
            return 0.0;
          },
          [&](const EppfModel::IdenticalDegenerate&) { return sizes.size() == 1 ? 0.0 : kNegInf; },
      },
      model.variant());
}

double eppf(const EppfModel& model, std::span<const std::size_t> sizes) {
  return std::exp(log_eppf(model, sizes));
}

double check_addition_rule(const EppfModel& model, std::span<const std::size_t> sizes) {
  require_sizes(sizes);
  std::vector<std::size_t> work(sizes.begin(), sizes.end());
  double rhs = 0.0;
  work.push_back(1);
  rhs += eppf(model, work);
  work.pop_back();
  for (std::size_t j = 0; j < work.size(); ++j) {
    ++work[j];
    rhs += eppf(model, work);
    --work[j];
  }
  return std::abs(eppf(model, sizes) - rhs);
}

double tie_probability(const EppfModel& model) {
  return std::visit(overloaded{
                        [](const EppfModel::Dirichlet& d) { return 1.0 / (1.0 + d.beta); },
                        [](const EppfModel::PitmanYor& p) { return (1.0 - p.alpha) / (p.beta + 1.0); },
                        [](const EppfModel::IidDegenerate&) { return 0.0; },
                        [](const EppfModel::IdenticalDegenerate&) { return 1.0; },
                    },
                    model.variant());
}

double nig_tie_probability(double beta) {
  if (!(beta > 0.0)) {
    throw std::domain_error(fmt::format("nig_tie_probability: beta must be > 0, got {}", beta));
  }
  // beta^2 e^beta E1(beta) overflows in its factors for large beta; combine in log space.
  const double scaled = std::exp(2.0 * std::log(beta) + beta + std::log(numerics::exp_integral_e1(beta)));
  return 0.5 * (1.0 + scaled - beta);
}

PredictionWeights prediction_weights(const EppfModel& model, std::span<const std::size_t> counts) {
  PredictionWeights out;
  out.existing.assign(counts.size(), 0.0);
  if (counts.empty()) {
    out.fresh = 1.0;
    return out;
  }
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  const double nd = static_cast<double>(n);
  std::visit(overloaded{
                 [&](const EppfModel::Dirichlet& d) {
                   for (std::size_t j = 0; j < counts.size(); ++j) {
                     out.existing[j] = static_cast<double>(counts[j]) / (d.beta + nd);
                   }
                   out.fresh = d.beta / (d.beta + nd);
                 },
                 [&](const EppfModel::PitmanYor& p) {
                   for (std::size_t j = 0; j < counts.size(); ++j) {
                     out.existing[j] = (static_cast<double>(counts[j]) - p.alpha) / (nd + p.beta);
                   }
                   out.fresh =
                       (p.beta + static_cast<double>(counts.size()) * p.alpha) / (nd + p.beta);
                 },
                 [&](const EppfModel::IidDegenerate&) { out.fresh = 1.0; },
                 [&](const EppfModel::IdenticalDegenerate&) {
                   if (counts.size() != 1) {
                     throw std::domain_error(
                         "prediction_weights: identical law cannot hold more than one distinct value");
                   }
                   out.existing[0] = 1.0;
                   out.fresh = 0.0;
                 },
             },
             model.variant());
  return out;
}

}  // namespace esbmix
