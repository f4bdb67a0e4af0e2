#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

#include "esbmix/random.hpp"

namespace esbmix {

/// Univariate Normal kernel N(y | m, 1/tau) with the conjugate prior
/// m | tau ~ N(mu0, 1/(lambda tau)), tau ~ Ga(a, rate b).
struct NormalGammaKernel {
  using Point = double;
  struct Atom {
    double mean = 0.0;
    double precision = 1.0;
  };
  static constexpr int dimension = 1;

  double mu0 = 0.0;
  double lambda = 0.01;
  double a = 0.5;
  double b = 0.5;

  void validate() const;
  std::string describe() const;

  double log_density(const Point& y, const Atom& xi) const;
  double log_prior(const Atom& xi) const;
  Atom sample_prior(Rng& rng) const;
  Atom sample_posterior(std::span<const Point> ys, Rng& rng) const;
};

/// Bivariate Normal kernel N2(y | m, Sigma) with the conjugate prior
/// m | Sigma ~ N2(mu0, Sigma/lambda), Sigma ~ IW(Psi, nu).
struct NormalInvWishartKernel {
  using Point = Eigen::Vector2d;
  /// Precision and log-determinant are cached alongside Sigma.
  struct Atom {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d precision = Eigen::Matrix2d::Identity();
    double log_det_cov = 0.0;

    static Atom from(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov);
  };
  static constexpr int dimension = 2;

  Eigen::Vector2d mu0 = Eigen::Vector2d::Zero();
  double lambda = 0.01;
  Eigen::Matrix2d psi = Eigen::Matrix2d::Identity();
  double nu = 2.0;

  void validate() const;
  std::string describe() const;

  double log_density(const Point& y, const Atom& xi) const;
  double log_prior(const Atom& xi) const;
  Atom sample_prior(Rng& rng) const;
  Atom sample_posterior(std::span<const Point> ys, Rng& rng) const;
};

/// Sigma ~ IW(scale, dof) through the Bartlett decomposition of its inverse.
/// A scale that fails its Cholesky factorization gets one jittered retry.
Eigen::Matrix2d sample_inverse_wishart(const Eigen::Matrix2d& scale, double dof, Rng& rng);

}  // namespace esbmix
