#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace esbmix {

/// A partition of {1..k}. Blocks hold sorted 1-based indices and are
/// ordered by their least element.
struct SetPartition {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> blocks;

  std::vector<std::size_t> block_sizes() const;
  /// Disjoint, covering, nonempty, canonically ordered.
  bool is_canonical() const;

  friend bool operator==(const SetPartition&, const SetPartition&) = default;
};

/// Bell numbers by the Bell-triangle recurrence; exact for k <= 25.
std::uint64_t bell_number(std::size_t k);

struct EnumerationLimit {
  std::size_t max_k = 12;
  bool override_cap = false;
};

class PartitionCapExceeded : public std::runtime_error {
 public:
  PartitionCapExceeded(std::size_t k, std::size_t cap);
  std::size_t k() const { return k_; }

 private:
  std::size_t k_;
};

/// Lazy enumeration of the partitions of {1..k} as restricted growth
/// strings a_1..a_k (a_1 = 0, a_i <= 1 + max_{j<i} a_j), in lexicographic
/// order. Labels are 0-based block ids.
///
///   PartitionEnumerator it(4);
///   do { use(it.labels(), it.num_blocks()); } while (it.next());
class PartitionEnumerator {
 public:
  explicit PartitionEnumerator(std::size_t k, EnumerationLimit limit = {});

  std::span<const std::size_t> labels() const { return labels_; }
  std::size_t num_blocks() const { return prefix_max_.empty() ? 0 : prefix_max_.back() + 1; }
  SetPartition partition() const;

  /// Advance; false once the last partition has been visited.
  bool next();

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> prefix_max_;
};

/// Visit every partition of {1..k} once, passing its labels and block count.
template <typename Visitor>
void for_each_partition(std::size_t k, Visitor&& visit, EnumerationLimit limit = {}) {
  PartitionEnumerator it(k, limit);
  do {
    visit(it.labels(), it.num_blocks());
  } while (it.next());
}

std::vector<SetPartition> enumerate_partitions(std::size_t k, EnumerationLimit limit = {});

/// Partition of {1..n} induced by equality of labels[i].
template <typename T>
SetPartition partition_of(std::span<const T> labels) {
  if (labels.empty()) throw std::invalid_argument("partition_of: labels must be nonempty");
  SetPartition out;
  out.k = labels.size();
  std::map<T, std::size_t> block_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [pos, inserted] = block_of.try_emplace(labels[i], out.blocks.size());
    if (inserted) out.blocks.emplace_back();
    out.blocks[pos->second].push_back(i + 1);
  }
  return out;
}

template <typename T>
SetPartition partition_of(const std::vector<T>& labels) {
  return partition_of(std::span<const T>(labels));
}

}  // namespace esbmix
