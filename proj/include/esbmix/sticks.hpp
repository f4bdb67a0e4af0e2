#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "esbmix/eppf.hpp"
#include "esbmix/random.hpp"

namespace esbmix {

/// Prior on the exchangeable sequence of length variables.
class LengthProcessSpec {
 public:
  /// Independent Be(a, b) lengths. Be(1, theta) gives the Dirichlet process.
  struct IidBeta {
    double a, b;
  };
  /// One Be(a, b) draw shared by every length: the Geometric process.
  struct SharedBeta {
    double a, b;
  };
  /// Lengths iid from a species sampling process with the given EPPF and
  /// Be(base_a, base_b) base measure.
  struct SpeciesDriven {
    EppfModel eppf;
    double base_a, base_b;
  };

  using Variant = std::variant<IidBeta, SharedBeta, SpeciesDriven>;

  static LengthProcessSpec iid_beta(double a, double b);
  static LengthProcessSpec shared_beta(double a, double b);
  static LengthProcessSpec species_driven(EppfModel eppf, double base_a, double base_b);
  /// Dirichlet-driven stick-breaking: Dirichlet(beta) EPPF with Be(1, theta) base.
  static LengthProcessSpec dsb(double beta, double theta) {
    return species_driven(EppfModel::dirichlet(beta), 1.0, theta);
  }

  const Variant& variant() const { return variant_; }
  /// Marginal law of each length is Be(base_a(), base_b()).
  double base_a() const;
  double base_b() const;
  /// EPPF governing ties among the lengths (iid / identical for the
  /// independent and shared variants).
  EppfModel tie_model() const;
  std::string describe() const;

 private:
  explicit LengthProcessSpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// A finite run of length variables with explicit tie bookkeeping:
/// values[i] == distinct[atom_index[i]] and counts[j] counts atom j.
class LengthPrefix {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  std::span<const std::size_t> atom_index() const { return atom_index_; }
  std::span<const double> distinct() const { return distinct_; }
  std::span<const std::size_t> counts() const { return counts_; }
  std::size_t num_distinct() const { return distinct_.size(); }

  void push_existing(std::size_t slot);
  void push_new(double value);
  /// Point position pos at an existing slot / at a brand-new value. A slot
  /// emptied by the move is removed and later slots shift down by one.
  void assign_existing(std::size_t pos, std::size_t slot);
  void assign_new(std::size_t pos, double value);
  /// Change the value of a whole slot (every tied position moves with it).
  void set_distinct_value(std::size_t slot, double value);
  /// Drop positions >= m.
  void truncate(std::size_t m);

  /// Rebuilds counts from atom_index and checks every invariant.
  bool is_consistent() const;

 private:
  void release(std::size_t slot);

  std::vector<double> values_;
  std::vector<std::size_t> atom_index_;
  std::vector<double> distinct_;
  std::vector<std::size_t> counts_;
};

/// w_1 = v_1, w_j = v_j prod_{i<j} (1 - v_i).
std::vector<double> sb_transform(std::span<const double> v);

/// Inverse stick-breaking map; v_k = 0 once the stick is exhausted.
std::vector<double> sb_inverse(std::span<const double> w, double tolerance = 1e-12);

/// Sequential draw of m exchangeable lengths under spec.
LengthPrefix sample_lengths_prefix(const LengthProcessSpec& spec, std::size_t m, Rng& rng);

/// Append one length drawn from its conditional law given prefix.
void append_length(LengthPrefix& prefix, const LengthProcessSpec& spec, Rng& rng);

class ExtensionCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExtendedWeights {
  LengthPrefix prefix;
  std::vector<double> weights;
};

inline constexpr std::size_t kDefaultStickCap = 1'000'000;

/// Grow prefix (at least one stick) until the weights cover `threshold`,
/// i.e. sum_{j<=phi} w_j >= threshold.
ExtendedWeights extend_weights_until(LengthPrefix prefix, const LengthProcessSpec& spec,
                                     double threshold, Rng& rng,
                                     std::size_t cap = kDefaultStickCap);

}  // namespace esbmix
