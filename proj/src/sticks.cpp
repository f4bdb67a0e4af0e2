#include "esbmix/sticks.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace esbmix {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_shapes(double a, double b, const char* what) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument(fmt::format("{}: Beta shapes must be finite and > 0 (a={}, b={})", what, a, b));
  }
}

}  // namespace

LengthProcessSpec LengthProcessSpec::iid_beta(double a, double b) {
  require_shapes(a, b, "iid_beta");
  return LengthProcessSpec(IidBeta{a, b});
}

LengthProcessSpec LengthProcessSpec::shared_beta(double a, double b) {
  require_shapes(a, b, "shared_beta");
  return LengthProcessSpec(SharedBeta{a, b});
}

LengthProcessSpec LengthProcessSpec::species_driven(EppfModel eppf, double base_a, double base_b) {
  require_shapes(base_a, base_b, "species_driven");
  return LengthProcessSpec(SpeciesDriven{eppf, base_a, base_b});
}

double LengthProcessSpec::base_a() const {
  return std::visit(overloaded{[](const IidBeta& s) { return s.a; }, [](const SharedBeta& s) { return s.a; },
                               [](const SpeciesDriven& s) { return s.base_a; }},
                    variant_);
}

double LengthProcessSpec::base_b() const {
  return std::visit(overloaded{[](const IidBeta& s) { return s.b; }, [](const SharedBeta& s) { return s.b; },
                               [](const SpeciesDriven& s) { return s.base_b; }},
                    variant_);
}

EppfModel LengthProcessSpec::tie_model() const {
  return std::visit(overloaded{[](const IidBeta&) { return EppfModel::iid(); },
                               [](const SharedBeta&) { return EppfModel::identical(); },
                               [](const SpeciesDriven& s) { return s.eppf; }},
                    variant_);
}

std::string LengthProcessSpec::describe() const {
  return std::visit(
      overloaded{[](const IidBeta& s) { return fmt::format("iid_beta(a={}, b={})", s.a, s.b); },
                 [](const SharedBeta& s) { return fmt::format("shared_beta(a={}, b={})", s.a, s.b); },
                 [](const SpeciesDriven& s) {
                   return fmt::format("species_driven({}, base=Be({}, {}))", s.eppf.describe(), s.base_a,
                                      s.base_b);
                 }},
      variant_);
}

// --- LengthPrefix ---------------------------------------------------------

void LengthPrefix::push_existing(std::size_t slot) {
  if (slot >= distinct_.size()) throw std::out_of_range("LengthPrefix::push_existing: bad slot");
  values_.push_back(distinct_[slot]);
  atom_index_.push_back(slot);
  ++counts_[slot];
}

void LengthPrefix::push_new(double value) {
  values_.push_back(value);
  atom_index_.push_back(distinct_.size());
  distinct_.push_back(value);
  counts_.push_back(1);
}

void LengthPrefix::release(std::size_t slot) {
  if (--counts_[slot] > 0) return;
  distinct_.erase(distinct_.begin() + static_cast<std::ptrdiff_t>(slot));
  counts_.erase(counts_.begin() + static_cast<std::ptrdiff_t>(slot));
  for (auto& idx : atom_index_) {
    if (idx != npos && idx > slot) --idx;
  }
}

void LengthPrefix::assign_existing(std::size_t pos, std::size_t slot) {
  if (pos >= values_.size() || slot >= distinct_.size()) {
    throw std::out_of_range("LengthPrefix::assign_existing: bad position or slot");
  }
  const std::size_t old = atom_index_[pos];
  if (old == slot) return;
  ++counts_[slot];
  atom_index_[pos] = npos;
  values_[pos] = distinct_[slot];
  const bool shifts = counts_[old] == 1 && slot > old;
  release(old);
  atom_index_[pos] = shifts ? slot - 1 : slot;
}

void LengthPrefix::assign_new(std::size_t pos, double value) {
  if (pos >= values_.size()) throw std::out_of_range("LengthPrefix::assign_new: bad position");
  const std::size_t old = atom_index_[pos];
  atom_index_[pos] = npos;
  release(old);
  atom_index_[pos] = distinct_.size();
  distinct_.push_back(value);
  counts_.push_back(1);
  values_[pos] = value;
}

void LengthPrefix::set_distinct_value(std::size_t slot, double value) {
  if (slot >= distinct_.size()) throw std::out_of_range("LengthPrefix::set_distinct_value: bad slot");
  distinct_[slot] = value;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (atom_index_[i] == slot) values_[i] = value;
  }
}

void LengthPrefix::truncate(std::size_t m) {
  while (values_.size() > m) {
    const std::size_t slot = atom_index_.back();
    values_.pop_back();
    atom_index_.pop_back();
    release(slot);
  }
}

bool LengthPrefix::is_consistent() const {
  if (atom_index_.size() != values_.size() || counts_.size() != distinct_.size()) return false;
  std::vector<std::size_t> rebuilt(distinct_.size(), 0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const std::size_t slot = atom_index_[i];
    if (slot >= distinct_.size()) return false;
    if (values_[i] != distinct_[slot]) return false;
    ++rebuilt[slot];
  }
  if (rebuilt != counts_) return false;
  for (std::size_t c : counts_) {
    if (c == 0) return false;
  }
  std::vector<double> sorted(distinct_.begin(), distinct_.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

// --- stick-breaking maps ----------------------------------------------------

std::vector<double> sb_transform(std::span<const double> v) {
  std::vector<double> w(v.size());
  double remaining = 1.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(v[j] >= 0.0 && v[j] <= 1.0)) {
      throw std::domain_error(fmt::format("sb_transform: v[{}] = {} outside [0,1]", j, v[j]));
    }
    w[j] = v[j] * remaining;
    remaining *= 1.0 - v[j];
  }
  return w;
}

std::vector<double> sb_inverse(std::span<const double> w, double tolerance) {
  std::vector<double> v(w.size());
  // Subtracting each weight from the remaining stick, rather than forming
  // 1 - sum(w), keeps the remainder accurate relative to its own size.
  double remaining = 1.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] < 0.0) throw std::domain_error(fmt::format("sb_inverse: negative weight w[{}] = {}", k, w[k]));
    v[k] = remaining > 0.0 ? std::clamp(w[k] / remaining, 0.0, 1.0) : 0.0;
    remaining -= w[k];
    if (remaining < -tolerance) {
      throw std::domain_error(fmt::format("sb_inverse: partial sum {} exceeds 1 at index {}", 1.0 - remaining, k));
    }
  }
  return v;
}

// --- sampling ---------------------------------------------------------------

void append_length(LengthPrefix& prefix, const LengthProcessSpec& spec, Rng& rng) {
  std::visit(overloaded{
                 [&](const LengthProcessSpec::IidBeta& s) { prefix.push_new(rng.beta(s.a, s.b)); },
                 [&](const LengthProcessSpec::SharedBeta& s) {
                   if (prefix.empty()) {
                     prefix.push_new(rng.beta(s.a, s.b));
                   } else {
                     prefix.push_existing(0);
                   }
                 },
                 [&](const LengthProcessSpec::SpeciesDriven& s) {
                   const auto pw = prediction_weights(s.eppf, prefix.counts());
                   std::vector<double> w(pw.existing);
                   w.push_back(pw.fresh);
                   const std::size_t pick = rng.categorical(w);
                   if (pick < pw.existing.size()) {
                     prefix.push_existing(pick);
                   } else {
                     prefix.push_new(rng.beta(s.base_a, s.base_b));
                   }
                 },
             },
             spec.variant());
}

LengthPrefix sample_lengths_prefix(const LengthProcessSpec& spec, std::size_t m, Rng& rng) {
  if (m == 0) throw std::invalid_argument("sample_lengths_prefix: m must be >= 1");
  LengthPrefix prefix;
  for (std::size_t i = 0; i < m; ++i) append_length(prefix, spec, rng);
  return prefix;
}

ExtendedWeights extend_weights_until(LengthPrefix prefix, const LengthProcessSpec& spec, double threshold,
                                     Rng& rng, std::size_t cap) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument(fmt::format("extend_weights_until: threshold must be in [0,1), got {}", threshold));
  }
  ExtendedWeights out;
  out.weights = sb_transform(prefix.values());
  double sum = 0.0;
  double residual = 1.0;
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    sum += out.weights[j];
    residual *= 1.0 - prefix.values()[j];
  }
  const double target_residual = 1.0 - threshold;
  while (prefix.empty() || (sum < threshold && residual > target_residual)) {
    if (prefix.size() >= cap) {
      throw ExtensionCapExceeded(fmt::format(
          "extend_weights_until: {} sticks cover only {} of the requested {} ({})", prefix.size(), sum,
          threshold, spec.describe()));
    }
    append_length(prefix, spec, rng);
    const double v = prefix.values().back();
    const double w = v * residual;
    out.weights.push_back(w);
    sum += w;
    residual *= 1.0 - v;
  }
  out.prefix = std::move(prefix);
  return out;
}

}  // namespace esbmix
