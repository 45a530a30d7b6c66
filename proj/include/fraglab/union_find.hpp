#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace fraglab {

/// Disjoint sets with union by size and path halving. Each set carries a
/// weight that is summed on union.
class DisjointSets {
 public:
  DisjointSets() = default;
  explicit DisjointSets(std::size_t n) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), 0u);
    weight_.assign(n, 1);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Merges the sets of a and b; returns the surviving representative.
  std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (weight_[a] < weight_[b]) std::swap(a, b);
    parent_[b] = a;
    weight_[a] += weight_[b];
    return a;
  }

  std::uint64_t weight(std::uint32_t x) { return weight_[find(x)]; }
  void set_weight_of_root(std::uint32_t root, std::uint64_t w) { weight_[root] = w; }
  void link_to(std::uint32_t child, std::uint32_t root) { parent_[child] = root; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint64_t> weight_;
};

}  // namespace fraglab
