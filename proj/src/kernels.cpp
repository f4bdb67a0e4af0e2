#include "esbmix/kernels.hpp"

#include <fmt/core.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace esbmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::Matrix2d cholesky_or_jitter(const Eigen::Matrix2d& m, const char* what) {
  Eigen::LLT<Eigen::Matrix2d> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = 1e-10 * (std::abs(m.trace()) + 1.0);
  llt.compute(m + jitter * Eigen::Matrix2d::Identity());
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw std::runtime_error(fmt::format("{}: matrix is not positive definite", what));
}

bool is_spd(const Eigen::Matrix2d& m) {
  if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  return m(0, 0) > 0.0 && m.determinant() > 0.0;
}

}  // namespace

// --- Normal-Gamma ---------------------------------------------------------------

void NormalGammaKernel::validate() const {
  if (!std::isfinite(mu0)) throw std::invalid_argument("NormalGammaKernel: mu0 must be finite");
  if (!(lambda > 0.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(lambda) || !std::isfinite(a) ||
      !std::isfinite(b)) {
    throw std::invalid_argument(
        fmt::format("NormalGammaKernel: lambda, a, b must be finite and > 0 (got {}, {}, {})", lambda, a, b));
  }
}

std::string NormalGammaKernel::describe() const {
  return fmt::format("normal_gamma(mu0={}, lambda={}, a={}, b={})", mu0, lambda, a, b);
}

double NormalGammaKernel::log_density(const Point& y, const Atom& xi) const {
  const double z = y - xi.mean;
  return 0.5 * (std::log(xi.precision) - kLog2Pi - xi.precision * z * z);
}

double NormalGammaKernel::log_prior(const Atom& xi) const {
  const double tau = xi.precision;
  const double log_gamma_part = a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(tau) - b * tau;
  const double z = xi.mean - mu0;
  return log_gamma_part + 0.5 * (std::log(lambda * tau) - kLog2Pi - lambda * tau * z * z);
}

NormalGammaKernel::Atom NormalGammaKernel::sample_prior(Rng& rng) const {
  const double tau = rng.gamma(a, b);
  return {rng.normal(mu0, 1.0 / std::sqrt(lambda * tau)), tau};
}

NormalGammaKernel::Atom NormalGammaKernel::sample_posterior(std::span<const Point> ys, Rng& rng) const {
  if (ys.empty()) return sample_prior(rng);
  const double n = static_cast<double>(ys.size());
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= n;
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  const double lambda_n = lambda + n;
  const double mu_n = (lambda * mu0 + n * mean) / lambda_n;
  const double a_n = a + 0.5 * n;
  const double b_n = b + 0.5 * ss + lambda * n * (mean - mu0) * (mean - mu0) / (2.0 * lambda_n);
  const double tau = rng.gamma(a_n, b_n);
  return {rng.normal(mu_n, 1.0 / std::sqrt(lambda_n * tau)), tau};
}

// --- Normal-inverse-Wishart -------------------------------------------------------

NormalInvWishartKernel::Atom NormalInvWishartKernel::Atom::from(const Eigen::Vector2d& mean,
                                                                const Eigen::Matrix2d& cov) {
  Atom out;
  out.mean = mean;
  out.cov = 0.5 * (cov + cov.transpose());
  const double det = out.cov.determinant();
  if (!(det > 0.0)) throw std::runtime_error("NormalInvWishartKernel: covariance is not positive definite");
  out.precision << out.cov(1, 1), -out.cov(0, 1), -out.cov(1, 0), out.cov(0, 0);
  out.precision /= det;
  out.log_det_cov = std::log(det);
  return out;
}

void NormalInvWishartKernel::validate() const {
  if (!mu0.allFinite()) throw std::invalid_argument("NormalInvWishartKernel: mu0 must be finite");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("NormalInvWishartKernel: lambda must be finite and > 0");
  }
  if (!is_spd(psi)) throw std::invalid_argument("NormalInvWishartKernel: Psi must be symmetric positive definite");
  if (!(nu > 1.0) || !std::isfinite(nu)) throw std::invalid_argument("NormalInvWishartKernel: nu must exceed 1");
}

std::string NormalInvWishartKernel::describe() const {
  return fmt::format("normal_inv_wishart(mu0=[{}, {}], lambda={}, psi=[[{}, {}], [{}, {}]], nu={})", mu0(0),
                     mu0(1), lambda, psi(0, 0), psi(0, 1), psi(1, 0), psi(1, 1), nu);
}

double NormalInvWishartKernel::log_density(const Point& y, const Atom& xi) const {
  const Eigen::Vector2d z = y - xi.mean;
  return -kLog2Pi - 0.5 * xi.log_det_cov - 0.5 * z.dot(xi.precision * z);
}

double NormalInvWishartKernel::log_prior(const Atom& xi) const {
  constexpr double p = 2.0;
  const double log_mv_gamma = 0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * nu) + std::lgamma(0.5 * nu - 0.5);
  const double log_iw = 0.5 * nu * std::log(psi.determinant()) - 0.5 * nu * p * std::numbers::ln2 - log_mv_gamma -
                        0.5 * (nu + p + 1.0) * xi.log_det_cov - 0.5 * (psi * xi.precision).trace();
  const Eigen::Vector2d z = xi.mean - mu0;
  const double log_normal = -kLog2Pi - 0.5 * (xi.log_det_cov - p * std::log(lambda)) -
                            0.5 * lambda * z.dot(xi.precision * z);
  return log_iw + log_normal;
}

Eigen::Matrix2d sample_inverse_wishart(const Eigen::Matrix2d& scale, double dof, Rng& rng) {
  if (!(dof > 1.0)) throw std::invalid_argument("sample_inverse_wishart: dof must exceed 1");
  // Sigma^{-1} ~ W(scale^{-1}, dof) = L A A' L' with L = chol(scale^{-1}).
  const Eigen::Matrix2d l = cholesky_or_jitter(scale.inverse(), "sample_inverse_wishart");
  Eigen::Matrix2d bartlett = Eigen::Matrix2d::Zero();
  bartlett(0, 0) = std::sqrt(rng.chi_squared(dof));
  bartlett(1, 1) = std::sqrt(rng.chi_squared(dof - 1.0));
  bartlett(1, 0) = rng.normal();
  const Eigen::Matrix2d la = l * bartlett;
  const Eigen::Matrix2d wishart = la * la.transpose();
  const Eigen::Matrix2d sigma = wishart.inverse();
  return 0.5 * (sigma + sigma.transpose());
}

NormalInvWishartKernel::Atom NormalInvWishartKernel::sample_prior(Rng& rng) const {
  const Eigen::Matrix2d sigma = sample_inverse_wishart(psi, nu, rng);
  const Eigen::Matrix2d l = cholesky_or_jitter(sigma / lambda, "NormalInvWishartKernel::sample_prior");
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  return Atom::from(mu0 + l * z, sigma);
}

NormalInvWishartKernel::Atom NormalInvWishartKernel::sample_posterior(std::span<const Point> ys,
                                                                      Rng& rng) const {
  if (ys.empty()) return sample_prior(rng);
  const double n = static_cast<double>(ys.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& y : ys) mean += y;
  mean /= n;
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& y : ys) scatter += (y - mean) * (y - mean).transpose();
  const double lambda_n = lambda + n;
  const Eigen::Vector2d mu_n = (lambda * mu0 + n * mean) / lambda_n;
  const Eigen::Vector2d dev = mean - mu0;
  const Eigen::Matrix2d psi_n = psi + scatter + (lambda * n / lambda_n) * dev * dev.transpose();
  const Eigen::Matrix2d sigma = sample_inverse_wishart(psi_n, nu + n, rng);
  const Eigen::Matrix2d l = cholesky_or_jitter(sigma / lambda_n, "NormalInvWishartKernel::sample_posterior");
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  return Atom::from(mu_n + l * z, sigma);
}

}  // namespace esbmix
