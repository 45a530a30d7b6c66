#pragma once

// Random recursive trees on [n] with i.i.d. unit exponential edge clocks, and
// the percolation clusters they induce at time t.
//
// Conventions: vertices are 1..n, arrays are indexed by vertex (slot 0 is
// unused). Edge e_i joins i to parent(i) and is removed at time eps(i).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fraglab/partition.hpp"
#include "fraglab/rng.hpp"
#include "fraglab/union_find.hpp"

namespace fraglab {

struct Realization;

/// Parent and survival value of the edge e_i, from a single engine call (plus
/// rejection redraws): the high half picks the parent, the low half gives a
/// survival value on the 2^-32 lattice, strictly inside (0,1).
struct EdgeDraw {
  Vertex parent;
  std::uint32_t survival_bits;

  double survival() const { return survival_from_bits(survival_bits); }

  static constexpr double survival_from_bits(std::uint32_t bits) {
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-32;
  }
};

inline EdgeDraw draw_edge(Engine& rng, std::size_t i) {
  const std::uint64_t x = rng();
  const auto range = static_cast<std::uint64_t>(i - 1);
  std::uint64_t m = (x >> 32) * range;
  auto low = static_cast<std::uint32_t>(m);
  if (low < range) {
    const auto threshold = static_cast<std::uint32_t>((0x100000000ULL - range) % range);
    while (low < threshold) {
      m = (rng() >> 32) * range;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return {static_cast<Vertex>(1 + (m >> 32)), static_cast<std::uint32_t>(x)};
}

class RecursiveTree {
 public:
  RecursiveTree() = default;

  /// Takes parent[i] for i = 2..n; parent[0], parent[1] are ignored.
  explicit RecursiveTree(std::vector<Vertex> parent) : parent_(std::move(parent)) {
    if (parent_.size() < 2) throw std::invalid_argument("RecursiveTree: n must be positive");
    parent_[0] = 0;
    parent_[1] = 0;
    for (std::size_t i = 2; i < parent_.size(); ++i) {
      if (parent_[i] < 1 || parent_[i] >= i)
        throw std::invalid_argument("RecursiveTree: parent(i) must lie in [1, i-1]");
    }
  }

  std::size_t size() const { return parent_.empty() ? 0 : parent_.size() - 1; }
  Vertex parent(std::size_t i) const { return parent_[i]; }
  std::span<const Vertex> parents() const { return parent_; }

  /// Redraws the tree in place on [n].
  void regrow(std::size_t n, Engine& rng) {
    if (n == 0) throw std::invalid_argument("gen_tree: n must be positive");
    parent_.resize(n + 1);
    parent_[0] = 0;
    parent_[1] = 0;
    for (std::size_t i = 2; i <= n; ++i) parent_[i] = uniform_int(rng, 1, static_cast<Vertex>(i - 1));
  }

 private:
  friend struct Realization;
  std::vector<Vertex> parent_;
};

/// Unit exponential removal times. Each clock is held as its survival value
/// e^{-eps}, so "edge removed by time t" is survival >= e^{-t} and sampling
/// needs no logarithm.
class EdgeClocks {
 public:
  EdgeClocks() = default;

  /// Takes eps[i] for i = 2..n; slots 0 and 1 are ignored.
  explicit EdgeClocks(const std::vector<double>& eps) : surv_(eps.size(), 0.0) {
    for (std::size_t i = 2; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0) || !std::isfinite(eps[i]))
        throw std::invalid_argument("EdgeClocks: clocks must be positive and finite");
      surv_[i] = std::exp(-eps[i]);
    }
  }

  static EdgeClocks from_survival(std::vector<double> surv) {
    EdgeClocks c;
    for (std::size_t i = 2; i < surv.size(); ++i) {
      if (!(surv[i] > 0.0 && surv[i] < 1.0))
        throw std::invalid_argument("EdgeClocks: survival values must lie in (0,1)");
    }
    for (std::size_t i = 0; i < std::min<std::size_t>(2, surv.size()); ++i) surv[i] = 0.0;
    c.surv_ = std::move(surv);
    return c;
  }

  std::size_t size() const { return surv_.empty() ? 0 : surv_.size() - 1; }
  double eps(std::size_t i) const { return -std::log(surv_[i]); }
  double survival(std::size_t i) const { return surv_[i]; }
  std::span<const double> survivals() const { return surv_; }
  bool removed_by(std::size_t i, double t) const { return surv_[i] >= std::exp(-t); }

  void redraw(std::size_t n, Engine& rng) {
    if (n < 2) throw std::invalid_argument("gen_clocks: n must be at least 2");
    surv_.resize(n + 1);
    surv_[0] = surv_[1] = 0.0;
    for (std::size_t i = 2; i <= n; ++i) surv_[i] = uniform_open(rng);
  }

 private:
  friend struct Realization;
  std::vector<double> surv_;
};

inline RecursiveTree gen_tree(std::size_t n, Engine& rng) {
  RecursiveTree t;
  t.regrow(n, rng);
  return t;
}

inline EdgeClocks gen_clocks(std::size_t n, Engine& rng) {
  EdgeClocks c;
  c.redraw(n, rng);
  return c;
}

/// A tree together with its clocks; buffers are reused across resamples.
struct Realization {
  RecursiveTree tree;
  EdgeClocks clocks;

  /// One draw_edge per vertex i = 2..n. The streaming samplers below consume
  /// the engine in the same order.
  void resample(std::size_t n, Engine& rng) {
    if (n == 0) throw std::invalid_argument("Realization: n must be positive");
    auto& parent = tree.parent_;
    auto& surv = clocks.surv_;
    parent.resize(n + 1);
    surv.resize(n + 1);
    parent[0] = parent[1] = 0;
    surv[0] = surv[1] = 0.0;
    for (std::size_t i = 2; i <= n; ++i) {
      const auto e = draw_edge(rng, i);
      parent[i] = e.parent;
      surv[i] = e.survival();
    }
  }
  std::size_t size() const { return tree.size(); }
};

inline void check_compatible(const RecursiveTree& tree, const EdgeClocks& clocks) {
  if (tree.size() >= 2 && clocks.size() != tree.size())
    throw std::invalid_argument("tree and clocks have different sizes");
}

/// Clusters of Π(t)|[n]. Cluster c (1-based) has size sizes[c-1]; clusters are
/// numbered in increasing order of their least vertex.
struct ClusterSnapshot {
  double t = 0.0;
  std::vector<std::uint32_t> label;
  std::vector<std::uint64_t> sizes;

  std::size_t n() const { return label.empty() ? 0 : label.size() - 1; }
  std::size_t cluster_count() const { return sizes.size(); }

  Partition induced_partition() const { return Partition::from_labels(label); }
};

/// Single ascending pass: vertex i inherits its parent's cluster unless its
/// edge has already been removed.
inline void clusters_at(const RecursiveTree& tree, const EdgeClocks& clocks, double t, ClusterSnapshot& out) {
  if (!(t >= 0.0)) throw std::invalid_argument("clusters_at: t must be nonnegative");
  check_compatible(tree, clocks);
  const std::size_t n = tree.size();
  const auto parent = tree.parents();
  const auto surv = clocks.survivals();
  const double keep_below = std::exp(-t);
  out.t = t;
  out.label.resize(n + 1);
  out.sizes.clear();
  out.label[0] = 0;
  out.label[1] = 1;
  out.sizes.push_back(1);
  for (std::size_t i = 2; i <= n; ++i) {
    if (surv[i] < keep_below) {
      const auto c = out.label[parent[i]];
      out.label[i] = c;
      ++out.sizes[c - 1];
    } else {
      out.sizes.push_back(1);
      out.label[i] = static_cast<std::uint32_t>(out.sizes.size());
    }
  }
}

inline ClusterSnapshot clusters_at(const RecursiveTree& tree, const EdgeClocks& clocks, double t) {
  ClusterSnapshot s;
  clusters_at(tree, clocks, t, s);
  return s;
}

/// n^{-e^{-t}}, the normalization that turns cluster sizes into weights.
inline double weight_scale(std::size_t n, double t) {
  return std::exp(-std::exp(-t) * std::log(static_cast<double>(n)));
}

struct WeightEstimate {
  double t = 0.0;
  std::size_t n = 0;
  std::vector<double> values;
};

inline WeightEstimate weights_from_sizes(std::span<const std::uint64_t> sizes, std::size_t n, double t) {
  WeightEstimate w{t, n, {}};
  w.values.reserve(sizes.size());
  const double scale = t == 0.0 ? 1.0 / static_cast<double>(n) : weight_scale(n, t);
  for (auto s : sizes) w.values.push_back(t == 0.0 && s == n ? 1.0 : scale * static_cast<double>(s));
  return w;
}

inline WeightEstimate weights_at(const ClusterSnapshot& snap) { return weights_from_sizes(snap.sizes, snap.n(), snap.t); }

/// Decreasing rearrangement, ties kept in block order.
inline std::vector<double> sorted_weights(const WeightEstimate& w) {
  std::vector<double> v = w.values;
  std::stable_sort(v.begin(), v.end(), std::greater<>());
  return v;
}

/// Size of T_i(t) ∩ [n]: vertices of the subtree rooted at i that are still
/// connected to i once every edge with clock <= t is removed (e_i itself is
/// ignored).
inline std::uint64_t subtree_cluster_size(const RecursiveTree& tree, const EdgeClocks& clocks, std::size_t i,
                                          double t) {
  const std::size_t n = tree.size();
  if (i < 1 || i > n) throw std::out_of_range("subtree_cluster_weight: vertex out of range");
  check_compatible(tree, clocks);
  const double keep_below = std::exp(-t);
  std::vector<std::uint8_t> in(n + 1, 0);
  in[i] = 1;
  std::uint64_t count = 1;
  for (std::size_t j = i + 1; j <= n; ++j) {
    const auto p = tree.parent(j);
    if (p >= i && in[p] && clocks.survival(j) < keep_below) {
      in[j] = 1;
      ++count;
    }
  }
  return count;
}

inline double subtree_cluster_weight(const RecursiveTree& tree, const EdgeClocks& clocks, std::size_t i, double t) {
  return weight_scale(tree.size(), t) * static_cast<double>(subtree_cluster_size(tree, clocks, i, t));
}

/// For each vertex, the largest survival value on its path to the root (the
/// root gets 0) and the edge attaining it. Vertex i is in the root cluster at
/// time t iff peak[i] < e^{-t}; the edge argpeak[i] is the first one on the
/// path to be removed.
struct PathMinima {
  std::vector<double> peak;
  std::vector<Vertex> argpeak;

  std::size_t n() const { return peak.empty() ? 0 : peak.size() - 1; }
  /// Smallest clock on the path from i to the root.
  double min_clock(std::size_t i) const { return -std::log(peak[i]); }
};

inline void root_path_minima(const RecursiveTree& tree, const EdgeClocks& clocks, PathMinima& out) {
  check_compatible(tree, clocks);
  const std::size_t n = tree.size();
  const auto parent = tree.parents();
  const auto surv = clocks.survivals();
  out.peak.resize(n + 1);
  out.argpeak.resize(n + 1);
  out.peak[0] = out.peak[1] = 0.0;
  out.argpeak[0] = out.argpeak[1] = 0;
  for (std::size_t i = 2; i <= n; ++i) {
    const auto p = parent[i];
    if (surv[i] > out.peak[p]) {
      out.peak[i] = surv[i];
      out.argpeak[i] = static_cast<Vertex>(i);
    } else {
      out.peak[i] = out.peak[p];
      out.argpeak[i] = out.argpeak[p];
    }
  }
}

/// e^{-t} for each grid time; validates ordering.
inline std::vector<double> survival_thresholds(std::span<const double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("time grid must be sorted ascending");
  if (!grid.empty() && grid.front() < 0.0) throw std::invalid_argument("time grid must be nonnegative");
  std::vector<double> thr(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) thr[g] = std::exp(-grid[g]);
  return thr;
}

/// Number of leading grid points at which a value is still below threshold.
inline std::size_t levels_below(std::span<const double> thr, double value) {
  std::size_t h = 0;
  while (h < thr.size() && value < thr[h]) ++h;
  return h;
}

/// Root-cluster sizes at each grid time, from the path peaks.
inline std::vector<std::uint64_t> root_sizes_on_grid(const PathMinima& pm, std::span<const double> grid) {
  const auto thr = survival_thresholds(grid);
  std::vector<std::uint64_t> above(grid.size() + 1, 0);
  for (std::size_t i = 1; i <= pm.n(); ++i) ++above[levels_below(thr, pm.peak[i])];
  std::vector<std::uint64_t> sizes(grid.size());
  std::uint64_t acc = 0;
  for (std::size_t g = grid.size(); g-- > 0;) {
    acc += above[g + 1];
    sizes[g] = acc;
  }
  return sizes;
}

struct WeightPoint {
  double t;
  double weight;
  std::uint64_t size;
};

inline std::vector<WeightPoint> weight_points(std::span<const double> grid, std::span<const std::uint64_t> sizes,
                                              std::size_t n) {
  std::vector<WeightPoint> out;
  out.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double w = grid[g] == 0.0 ? static_cast<double>(sizes[g]) / static_cast<double>(n)
                                    : weight_scale(n, grid[g]) * static_cast<double>(sizes[g]);
    out.push_back({grid[g], w, sizes[g]});
  }
  return out;
}

/// (t, X̂_1(t)) along a sorted grid; one realization serves every grid point.
inline std::vector<WeightPoint> root_weight_path(const RecursiveTree& tree, const EdgeClocks& clocks,
                                                 std::span<const double> grid) {
  survival_thresholds(grid);
  PathMinima pm;
  if (tree.size() >= 2) {
    root_path_minima(tree, clocks, pm);
  } else {
    pm.peak.assign(tree.size() + 1, 0.0);
  }
  return weight_points(grid, root_sizes_on_grid(pm, grid), tree.size());
}

struct RootJump {
  double time;
  double log_drop;  // ln(size_after / size_before) < 0
  std::uint64_t size_before;
  std::uint64_t size_after;

  friend bool operator==(const RootJump&, const RootJump&) = default;
};

inline double log_ratio(std::uint64_t after, std::uint64_t before) {
  return std::log(static_cast<double>(after) / static_cast<double>(before));
}

/// Jumps of ln |Π_1(t) ∩ [n]| on [0, horizon], in increasing time.
///
/// Works backwards: starts from the clusters at the horizon and re-inserts
/// removed edges in decreasing clock order; an edge whose parent side already
/// holds the root is a split of the root cluster in forward time.
class RootJumpTracker {
 public:
  std::vector<RootJump> operator()(const RecursiveTree& tree, const EdgeClocks& clocks, double horizon) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("root_jump_magnitudes: horizon must be nonnegative");
    const std::size_t n = tree.size();
    std::vector<RootJump> jumps;
    if (n < 2) return jumps;
    check_compatible(tree, clocks);
    const double removed_from = std::exp(-horizon);
    sets_.reset(n + 1);
    removed_.clear();
    for (std::size_t i = 2; i <= n; ++i) {
      if (clocks.survival(i) < removed_from)
        sets_.unite(static_cast<std::uint32_t>(i), tree.parent(i));
      else
        removed_.emplace_back(clocks.survival(i), static_cast<Vertex>(i));
    }
    // Decreasing clock = increasing survival.
    std::sort(removed_.begin(), removed_.end());
    for (const auto& [surv, k] : removed_) {
      const auto root_side = sets_.find(tree.parent(k));
      if (root_side == sets_.find(1)) {
        const auto after = sets_.weight(root_side);
        const auto before = after + sets_.weight(k);
        jumps.push_back({-std::log(surv), log_ratio(after, before), before, after});
      }
      sets_.unite(k, tree.parent(k));
    }
    std::reverse(jumps.begin(), jumps.end());
    return jumps;
  }

 private:
  DisjointSets sets_;
  std::vector<std::pair<double, Vertex>> removed_;
};

inline std::vector<RootJump> root_jump_magnitudes(const RecursiveTree& tree, const EdgeClocks& clocks,
                                                  double horizon) {
  RootJumpTracker tracker;
  return tracker(tree, clocks, horizon);
}

/// Same jumps as root_jump_magnitudes, read off the path peaks in O(n): the
/// vertices lost when edge k is removed are those whose path peak sits at k.
inline std::vector<RootJump> root_jumps_from_minima(const PathMinima& pm, double horizon,
                                                    std::vector<std::uint32_t>& scratch) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("root_jump_magnitudes: horizon must be nonnegative");
  const std::size_t n = pm.n();
  const double removed_from = std::exp(-horizon);
  scratch.assign(n + 1, 0);
  std::vector<std::pair<double, Vertex>> edges;
  for (std::size_t i = 2; i <= n; ++i) {
    if (pm.peak[i] >= removed_from) {
      const auto k = pm.argpeak[i];
      if (scratch[k]++ == 0) edges.emplace_back(pm.peak[k], k);
    }
  }
  // Increasing time = decreasing survival.
  std::sort(edges.begin(), edges.end(), std::greater<>());
  std::vector<RootJump> jumps;
  jumps.reserve(edges.size());
  std::uint64_t size = n;
  for (const auto& [surv, k] : edges) {
    const std::uint64_t after = size - scratch[k];
    jumps.push_back({-std::log(surv), log_ratio(after, size), size, after});
    size = after;
  }
  return jumps;
}

// ---------------------------------------------------------------------------
// Streaming samplers. Each draws a fresh realization on [n] exactly as
// Realization::resample would (same engine consumption) but fuses the
// per-vertex work into the generating loop, so the tree is never stored.

/// Root-cluster sizes on a time grid (at most 255 grid points).
class RootGridSampler {
 public:
  std::vector<std::uint64_t> operator()(std::size_t n, std::span<const double> grid, Engine& rng) {
    if (n < 2) throw std::invalid_argument("RootGridSampler: n must be at least 2");
    if (grid.size() > 255) throw std::invalid_argument("RootGridSampler: at most 255 grid points");
    const auto thr = survival_thresholds(grid);
    const auto full = static_cast<std::uint8_t>(grid.size());
    depth_.resize(n + 1);
    depth_[1] = full;
    std::vector<std::uint64_t> above(grid.size() + 1, 0);
    ++above[full];
    for (std::size_t i = 2; i <= n; ++i) {
      const auto e = draw_edge(rng, i);
      const double s = e.survival();
      auto h = depth_[e.parent];
      while (h > 0 && s >= thr[h - 1]) --h;
      depth_[i] = h;
      ++above[h];
    }
    std::vector<std::uint64_t> sizes(grid.size());
    std::uint64_t acc = 0;
    for (std::size_t g = grid.size(); g-- > 0;) {
      acc += above[g + 1];
      sizes[g] = acc;
    }
    return sizes;
  }

 private:
  std::vector<std::uint8_t> depth_;
};

/// Jumps of the root cluster on [0, horizon].
class RootJumpSampler {
 public:
  std::vector<RootJump> operator()(std::size_t n, double horizon, Engine& rng) {
    if (n < 2) throw std::invalid_argument("RootJumpSampler: n must be at least 2");
    if (!(horizon >= 0.0)) throw std::invalid_argument("root_jump_magnitudes: horizon must be nonnegative");
    // Survival bits are compared directly; edge 0 marks the root's empty path.
    peak_.resize(n + 1);
    peak_[1] = {0, 0};
    for (std::size_t i = 2; i <= n; ++i) {
      const auto e = draw_edge(rng, i);
      const auto& up = peak_[e.parent];
      if (up.edge == 0 || e.survival_bits > up.bits)
        peak_[i] = {e.survival_bits, static_cast<Vertex>(i)};
      else
        peak_[i] = up;
    }
    const double removed_from = std::exp(-horizon);
    count_.assign(n + 1, 0);
    edges_.clear();
    for (std::size_t i = 2; i <= n; ++i) {
      const auto& pk = peak_[i];
      if (EdgeDraw::survival_from_bits(pk.bits) >= removed_from && count_[pk.edge]++ == 0)
        edges_.emplace_back(pk.bits, pk.edge);
    }
    std::sort(edges_.begin(), edges_.end(), std::greater<>());
    std::vector<RootJump> jumps;
    jumps.reserve(edges_.size());
    std::uint64_t size = n;
    for (const auto& [bits, k] : edges_) {
      const std::uint64_t after = size - count_[k];
      jumps.push_back({-std::log(EdgeDraw::survival_from_bits(bits)), log_ratio(after, size), size, after});
      size = after;
    }
    return jumps;
  }

 private:
  struct Peak {
    std::uint32_t bits;
    Vertex edge;
  };
  std::vector<Peak> peak_;
  std::vector<std::uint32_t> count_;
  std::vector<std::pair<std::uint32_t, Vertex>> edges_;
};

/// Sizes of blocks 1..j of Π(t)|[n] (fewer when fewer exist), j <= 254.
/// One byte per vertex: its block if that is among the first j, else j.
class LeadingBlocksSampler {
 public:
  std::vector<std::uint64_t> operator()(std::size_t n, double t, std::size_t j, Engine& rng) {
    if (n < 2) throw std::invalid_argument("LeadingBlocksSampler: n must be at least 2");
    if (j < 1 || j > 254) throw std::invalid_argument("LeadingBlocksSampler: need 1 <= j <= 254");
    if (!(t >= 0.0)) throw std::invalid_argument("LeadingBlocksSampler: t must be nonnegative");
    const double keep_below = std::exp(-t);
    block_.resize(n + 1);
    block_[1] = 0;
    std::size_t opened = 1;
    for (std::size_t i = 2; i <= n; ++i) {
      const auto e = draw_edge(rng, i);
      const bool keep = e.survival() < keep_below;
      const bool opens = !keep && opened < j;
      const auto fresh = static_cast<std::uint8_t>(opens ? opened : j);
      const std::uint8_t inherited = block_[e.parent];
      block_[i] = keep ? inherited : fresh;
      opened += opens;
    }
    std::vector<std::uint64_t> sizes(j + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) ++sizes[block_[i]];
    sizes.resize(opened);
    return sizes;
  }

 private:
  std::vector<std::uint8_t> block_;
};

/// All cluster sizes at each grid time (at most 8), one pass for the whole grid.
class ClusterGridSampler {
 public:
  static constexpr std::size_t max_grid = 8;

  /// sizes[g][c-1] is the size of cluster c at grid[g].
  std::vector<std::vector<std::uint64_t>> operator()(std::size_t n, std::span<const double> grid, Engine& rng) {
    if (n < 2) throw std::invalid_argument("ClusterGridSampler: n must be at least 2");
    if (grid.empty() || grid.size() > max_grid) throw std::invalid_argument("ClusterGridSampler: 1 to 8 grid points");
    const auto thr = survival_thresholds(grid);
    const std::size_t gc = grid.size();
    labels_.resize((n + 1) * gc);
    std::array<std::uint32_t, max_grid> opened{};
    for (std::size_t g = 0; g < gc; ++g) {
      labels_[gc + g] = 1;
      opened[g] = 1;
    }
    for (std::size_t i = 2; i <= n; ++i) {
      const auto e = draw_edge(rng, i);
      const double s = e.survival();
      const std::uint32_t* from = &labels_[e.parent * gc];
      std::uint32_t* to = &labels_[i * gc];
      for (std::size_t g = 0; g < gc; ++g) to[g] = s < thr[g] ? from[g] : ++opened[g];
    }
    std::vector<std::vector<std::uint64_t>> sizes(gc);
    for (std::size_t g = 0; g < gc; ++g) sizes[g].assign(opened[g], 0);
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t g = 0; g < gc; ++g) ++sizes[g][labels_[i * gc + g] - 1];
    return sizes;
  }

 private:
  std::vector<std::uint32_t> labels_;
};

}  // namespace fraglab
