#include "esbmix/partitions.hpp"

#include <fmt/core.h>

#include <algorithm>

namespace esbmix {

std::vector<std::size_t> SetPartition::block_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(blocks.size());
  for (const auto& b : blocks) sizes.push_back(b.size());
  return sizes;
}

bool SetPartition::is_canonical() const {
  std::vector<bool> seen(k + 1, false);
  std::size_t covered = 0;
  std::size_t previous_least = 0;
  for (const auto& b : blocks) {
    if (b.empty() || !std::is_sorted(b.begin(), b.end())) return false;
    if (b.front() <= previous_least) return false;
    previous_least = b.front();
    for (std::size_t i : b) {
      if (i < 1 || i > k || seen[i]) return false;
      seen[i] = true;
      ++covered;
    }
  }
  return covered == k;
}

std::uint64_t bell_number(std::size_t k) {
  if (k > 25) throw std::overflow_error("bell_number: exceeds 64-bit range beyond k = 25");
  if (k == 0) return 1;
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 1; i < k; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.back();
}

PartitionCapExceeded::PartitionCapExceeded(std::size_t k, std::size_t cap)
    : std::runtime_error(fmt::format(
          "partition enumeration refused: k = {} exceeds cap {} (Bell({}) = {} partitions)", k, cap,
          k, k <= 25 ? fmt::format("{}", bell_number(k)) : std::string(">4.6e18"))),
      k_(k) {}

PartitionEnumerator::PartitionEnumerator(std::size_t k, EnumerationLimit limit)
    : labels_(k, 0), prefix_max_(k, 0) {
  if (k == 0) throw std::invalid_argument("PartitionEnumerator: k must be >= 1");
  if (k > limit.max_k && !limit.override_cap) throw PartitionCapExceeded(k, limit.max_k);
}

bool PartitionEnumerator::next() {
  const std::size_t k = labels_.size();
  for (std::size_t i = k; i-- > 1;) {
    if (labels_[i] <= prefix_max_[i - 1]) {
      ++labels_[i];
      prefix_max_[i] = std::max(prefix_max_[i - 1], labels_[i]);
      for (std::size_t j = i + 1; j < k; ++j) {
        labels_[j] = 0;
        prefix_max_[j] = prefix_max_[i];
      }
      return true;
    }
  }
  return false;
}

SetPartition PartitionEnumerator::partition() const {
  SetPartition out;
  out.k = labels_.size();
  out.blocks.resize(num_blocks());
  for (std::size_t i = 0; i < labels_.size(); ++i) out.blocks[labels_[i]].push_back(i + 1);
  return out;
}

std::vector<SetPartition> enumerate_partitions(std::size_t k, EnumerationLimit limit) {
  std::vector<SetPartition> out;
  PartitionEnumerator it(k, limit);
  do {
    out.push_back(it.partition());
  } while (it.next());
  return out;
}

}  // namespace esbmix
