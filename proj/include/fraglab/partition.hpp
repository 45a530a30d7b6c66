#pragma once

// Finite partitions ordered by least element, together with the restriction
// and fragmentation operators used to describe the restricted chains.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraglab {

using Vertex = std::uint32_t;

/// A nonempty, strictly increasing set of vertices.
class Block {
 public:
  Block() = default;
  explicit Block(std::vector<Vertex> elements) : elems_(std::move(elements)) {
    if (elems_.empty()) throw std::invalid_argument("Block: empty block");
    for (std::size_t i = 1; i < elems_.size(); ++i) {
      if (elems_[i - 1] >= elems_[i])
        throw std::invalid_argument("Block: elements must be strictly increasing");
    }
    if (elems_.front() == 0) throw std::invalid_argument("Block: vertices start at 1");
  }
  Block(std::initializer_list<Vertex> elements) : Block(std::vector<Vertex>(elements)) {}

  /// j-th smallest element, 1-based as in B(j).
  Vertex at(std::size_t j) const { return elems_.at(j - 1); }
  Vertex min() const { return elems_.front(); }
  std::size_t size() const { return elems_.size(); }
  std::span<const Vertex> elements() const { return elems_; }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }

  bool contains(Vertex v) const { return std::binary_search(elems_.begin(), elems_.end(), v); }

  friend bool operator==(const Block&, const Block&) = default;
  friend auto operator<=>(const Block& a, const Block& b) { return a.elems_ <=> b.elems_; }

 private:
  std::vector<Vertex> elems_;
};

/// Partition of a finite set of positive integers. Blocks are kept in
/// increasing order of their least elements.
class Partition {
 public:
  Partition() = default;

  /// Validates disjointness and reorders by least element.
  explicit Partition(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    order_by_minimum();
    std::vector<Vertex> all;
    for (const auto& b : blocks_) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
      throw std::invalid_argument("Partition: blocks are not disjoint");
    ground_size_ = all.size();
    max_ = all.empty() ? 0 : all.back();
  }

  Partition(std::initializer_list<std::initializer_list<Vertex>> blocks) {
    std::vector<Block> bs;
    for (auto b : blocks) bs.emplace_back(b);
    *this = Partition(std::move(bs));
  }

  /// The neutral partition 1_[n].
  static Partition neutral(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Partition::neutral: n must be positive");
    std::vector<Vertex> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<Vertex>(i + 1);
    return Partition({Block(std::move(all))});
  }

  /// Partition of [n] into singletons.
  static Partition singletons(std::size_t n) {
    std::vector<Block> bs;
    for (std::size_t i = 1; i <= n; ++i) bs.push_back(Block{static_cast<Vertex>(i)});
    return Partition(std::move(bs));
  }

  /// Builds a partition of [n] from a 1-based label map (labels[0] unused).
  static Partition from_labels(std::span<const std::uint32_t> labels) {
    std::uint32_t count = 0;
    for (std::size_t v = 1; v < labels.size(); ++v) count = std::max(count, labels[v]);
    std::vector<std::vector<Vertex>> bs(count);
    for (std::size_t v = 1; v < labels.size(); ++v) {
      if (labels[v] == 0) throw std::invalid_argument("from_labels: label 0 is reserved");
      bs[labels[v] - 1].push_back(static_cast<Vertex>(v));
    }
    std::vector<Block> blocks;
    for (auto& b : bs)
      if (!b.empty()) blocks.emplace_back(std::move(b));
    return Partition(std::move(blocks));
  }

  std::size_t block_count() const { return blocks_.size(); }
  /// i-th block, 1-based.
  const Block& block(std::size_t i) const { return blocks_.at(i - 1); }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t ground_size() const { return ground_size_; }
  Vertex max_element() const { return max_; }

  /// True when the ground set is exactly {1,...,ground_size()}.
  bool is_of_range() const { return max_ == ground_size_; }

  std::vector<std::size_t> block_sizes() const {
    std::vector<std::size_t> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.size());
    return out;
  }

  /// Canonical text form, e.g. "{1,3}{2}{4}".
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& b : blocks_) {
      os << '{';
      bool first = true;
      for (auto v : b) {
        if (!first) os << ',';
        os << v;
        first = false;
      }
      os << '}';
    }
    return os.str();
  }

  friend bool operator==(const Partition& a, const Partition& b) { return a.blocks_ == b.blocks_; }
  friend bool operator<(const Partition& a, const Partition& b) { return a.blocks_ < b.blocks_; }

 private:
  void order_by_minimum() {
    std::stable_sort(blocks_.begin(), blocks_.end(),
                     [](const Block& a, const Block& b) { return a.min() < b.min(); });
  }

  std::vector<Block> blocks_;
  std::size_t ground_size_ = 0;
  Vertex max_ = 0;
};

/// Restriction of a partition of [n] to [m].
inline Partition restrict(const Partition& pi, std::size_t m) {
  if (m < 1 || m > pi.ground_size())
    throw std::out_of_range("restrict: m must satisfy 1 <= m <= n");
  std::vector<Block> out;
  for (const auto& b : pi.blocks()) {
    std::vector<Vertex> kept;
    for (auto v : b) {
      if (v > m) break;
      kept.push_back(v);
    }
    if (!kept.empty()) out.emplace_back(std::move(kept));
  }
  return Partition(std::move(out));
}

/// B∘π: the partition of B induced by π when B is enumerated in increasing
/// order. π may live on any [l] with l >= |B|.
inline Partition compose_block(const Block& b, const Partition& pi) {
  if (pi.ground_size() < b.size() || !pi.is_of_range())
    throw std::invalid_argument("compose_block: partition ground set smaller than block");
  std::vector<Block> out;
  for (const auto& pb : pi.blocks()) {
    std::vector<Vertex> mapped;
    for (auto j : pb) {
      if (j > b.size()) break;
      mapped.push_back(b.at(j));
    }
    if (!mapped.empty()) out.emplace_back(std::move(mapped));
  }
  return Partition(std::move(out));
}

/// η ∘_i π: replaces the i-th block of η by η_i ∘ π.
inline Partition fragment_at(const Partition& eta, std::size_t i, const Partition& pi) {
  if (i < 1 || i > eta.block_count())
    throw std::out_of_range("fragment_at: block index out of range");
  std::vector<Block> out;
  for (std::size_t b = 1; b <= eta.block_count(); ++b) {
    if (b == i) {
      auto split = compose_block(eta.block(b), pi);
      out.insert(out.end(), split.blocks().begin(), split.blocks().end());
    } else {
      out.push_back(eta.block(b));
    }
  }
  return Partition(std::move(out));
}

/// η ∘ π^(·): the i-th block of η is split by pis[i-1], for every i.
inline Partition fragment_all(const Partition& eta, std::span<const Partition> pis) {
  if (pis.size() != eta.block_count())
    throw std::invalid_argument("fragment_all: need one partition per block");
  std::vector<Block> out;
  for (std::size_t b = 1; b <= eta.block_count(); ++b) {
    auto split = compose_block(eta.block(b), pis[b - 1]);
    out.insert(out.end(), split.blocks().begin(), split.blocks().end());
  }
  return Partition(std::move(out));
}

/// Visits every partition of [n] (restricted growth strings), n <= 12.
inline void for_each_partition(std::size_t n, const std::function<void(const Partition&)>& visit) {
  if (n == 0 || n > 12) throw std::out_of_range("for_each_partition: n must be in [1,12]");
  std::vector<std::uint32_t> label(n + 1, 1);
  std::vector<std::uint32_t> prefix_max(n + 1, 1);
  while (true) {
    visit(Partition::from_labels(label));
    // Advance the growth string label[2..n].
    std::size_t i = n;
    while (i >= 2 && label[i] == prefix_max[i - 1] + 1) --i;
    if (i < 2) return;
    ++label[i];
    prefix_max[i] = std::max(prefix_max[i - 1], label[i]);
    for (std::size_t j = i + 1; j <= n; ++j) {
      label[j] = 1;
      prefix_max[j] = prefix_max[j - 1];
    }
  }
}

inline std::vector<Partition> all_partitions(std::size_t n) {
  std::vector<Partition> out;
  for_each_partition(n, [&](const Partition& p) { out.push_back(p); });
  return out;
}

}  // namespace fraglab
