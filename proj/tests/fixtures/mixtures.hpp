#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace esbmix::fixtures {

struct NormalComponent {
  double weight;
  double mean;
  double sd;
};

struct UnivariateSample {
  std::vector<double> y;
  std::vector<std::size_t> label;  // 0-based component index
};

class UnivariateMixture {
 public:
  explicit UnivariateMixture(std::vector<NormalComponent> components);
  double density(double y) const;
  UnivariateSample sample(std::size_t n, std::uint64_t seed) const;
  const std::vector<NormalComponent>& components() const { return components_; }

 private:
  std::vector<NormalComponent> components_;
};

struct BivariateComponent {
  double weight;
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

struct BivariateSample {
  std::vector<Eigen::Vector2d> y;
  std::vector<std::size_t> label;
};

class BivariateMixture {
 public:
  explicit BivariateMixture(std::vector<BivariateComponent> components);
  BivariateSample sample(std::size_t n, std::uint64_t seed) const;
  const std::vector<BivariateComponent>& components() const { return components_; }

 private:
  std::vector<BivariateComponent> components_;
};

/// Means -6, 0, 6, unit variances, weights 0.3 / 0.4 / 0.3.
UnivariateMixture three_normals();
/// Seven unequal, partly overlapping normals on roughly [-12, 12].
UnivariateMixture seven_normals();
/// Four spherical Gaussians (sd 0.7) centred at (+-5, +-5), equal weights.
BivariateMixture four_gaussians();
/// Paw print: two-lobed pad and five toes.
BivariateMixture paw();

inline constexpr std::uint64_t kThreeNormalsSeed = 9001;
inline constexpr std::uint64_t kSevenNormalsSeed = 9002;
inline constexpr std::uint64_t kFourGaussiansSeed = 9003;
inline constexpr std::uint64_t kPawSeed = 9004;

}  // namespace esbmix::fixtures
