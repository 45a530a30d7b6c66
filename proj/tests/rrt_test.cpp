#include <gtest/gtest.h>

#include <set>

#include "fraglab/exact_dist.hpp"
#include "fraglab/rrt.hpp"
#include "fraglab/stats.hpp"

using namespace fraglab;

namespace {

Realization realize(std::size_t n, std::uint64_t replica) {
  auto rng = make_engine(2024, stream_id("rrt-test"), replica);
  Realization r;
  r.resample(n, rng);
  return r;
}

// First m vertices of a realization, as a standalone tree with clocks.
std::pair<RecursiveTree, EdgeClocks> prefix(const Realization& r, std::size_t m) {
  std::vector<Vertex> parent(r.tree.parents().begin(), r.tree.parents().begin() + m + 1);
  std::vector<double> surv(r.clocks.survivals().begin(), r.clocks.survivals().begin() + m + 1);
  return {RecursiveTree(parent), EdgeClocks::from_survival(surv)};
}

// E[p^{depth(i)}] by the recursion a_1 = 1, a_i = p/(i-1) Σ_{j<i} a_j; the
// root cluster's mean size is Σ a_i.
double root_cluster_mean(std::size_t n, double p) {
  double prefix_sum = 1.0;
  for (std::size_t i = 2; i <= n; ++i) prefix_sum += p * prefix_sum / static_cast<double>(i - 1);
  return prefix_sum;
}

}  // namespace

TEST(RecursiveTree, ValidatesParents) {
  EXPECT_THROW(RecursiveTree(std::vector<Vertex>{0}), std::invalid_argument);
  EXPECT_THROW(RecursiveTree(std::vector<Vertex>{0, 0, 1, 3}), std::invalid_argument);
  EXPECT_NO_THROW(RecursiveTree(std::vector<Vertex>{0, 0, 1, 2, 1}));
  auto rng = make_engine(1, 2, 3);
  const auto t = gen_tree(500, rng);
  for (std::size_t i = 2; i <= 500; ++i) {
    EXPECT_GE(t.parent(i), 1u);
    EXPECT_LT(t.parent(i), i);
  }
}

TEST(EdgeClocks, Validates) {
  EXPECT_THROW(EdgeClocks(std::vector<double>{0, 0, -1.0}), std::invalid_argument);
  EXPECT_THROW(EdgeClocks::from_survival({0, 0, 1.0}), std::invalid_argument);
  EdgeClocks c(std::vector<double>{0, 0, 0.5});
  EXPECT_TRUE(c.removed_by(2, 0.6));
  EXPECT_FALSE(c.removed_by(2, 0.4));
  EXPECT_NEAR(c.eps(2), 0.5, 1e-15);
}

TEST(Clusters, HandComputed) {
  // 1 ← 2 ← 3, 1 ← 4; clocks 0.2, 1.5, 0.9.
  RecursiveTree tree({0, 0, 1, 2, 1});
  EdgeClocks clocks(std::vector<double>{0, 0, 0.2, 1.5, 0.9});
  EXPECT_EQ(clusters_at(tree, clocks, 0.1).induced_partition().to_string(), "{1,2,3,4}");
  EXPECT_EQ(clusters_at(tree, clocks, 0.5).induced_partition().to_string(), "{1,4}{2,3}");
  EXPECT_EQ(clusters_at(tree, clocks, 1.0).induced_partition().to_string(), "{1}{2,3}{4}");
  EXPECT_EQ(clusters_at(tree, clocks, 2.0).induced_partition().to_string(), "{1}{2}{3}{4}");
  EXPECT_THROW(clusters_at(tree, clocks, -1.0), std::invalid_argument);
}

TEST(Clusters, SnapshotInvariants) {
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto r = realize(3000, rep);
    for (double t : {0.0, 0.3, 1.0, 2.5}) {
      const auto s = clusters_at(r.tree, r.clocks, t);
      EXPECT_EQ(s.label[1], 1u);
      std::uint64_t total = 0;
      for (auto x : s.sizes) total += x;
      EXPECT_EQ(total, 3000u);
      // Clusters are numbered by first appearance, so minima increase.
      std::uint32_t seen = 0;
      for (std::size_t i = 1; i <= s.n(); ++i) {
        EXPECT_LE(s.label[i], seen + 1);
        seen = std::max(seen, s.label[i]);
      }
      EXPECT_EQ(seen, s.cluster_count());
    }
  }
}

TEST(Clusters, WeightsAtTimeZeroAreOne) {
  const auto r = realize(1000, 1);
  const auto w = weights_at(clusters_at(r.tree, r.clocks, 0.0));
  ASSERT_EQ(w.values.size(), 1u);
  EXPECT_EQ(w.values[0], 1.0);
}

TEST(Clusters, SortedWeightsDecreaseAndKeepTheMultiset) {
  const auto r = realize(5000, 2);
  const auto w = weights_at(clusters_at(r.tree, r.clocks, 1.0));
  const auto s = sorted_weights(w);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end(), std::greater<>()));
  auto a = w.values;
  std::sort(a.begin(), a.end(), std::greater<>());
  EXPECT_EQ(a, s);
  for (double v : s) EXPECT_GT(v, 0.0);
}

TEST(Clusters, RefineAsTimeIncreases) {
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto r = realize(2000, rep);
    const double ts[] = {0.1, 0.4, 0.8, 1.6};
    for (std::size_t a = 0; a + 1 < 4; ++a) {
      const auto coarse = clusters_at(r.tree, r.clocks, ts[a]);
      const auto fine = clusters_at(r.tree, r.clocks, ts[a + 1]);
      // Each fine cluster maps into a single coarse cluster.
      std::vector<std::uint32_t> into(fine.cluster_count() + 1, 0);
      for (std::size_t i = 1; i <= 2000; ++i) {
        auto& slot = into[fine.label[i]];
        if (slot == 0) slot = coarse.label[i];
        EXPECT_EQ(slot, coarse.label[i]);
      }
    }
  }
}

TEST(Clusters, ConsistentUnderRestriction) {
  const auto r = realize(300, 7);
  for (double t : {0.2, 0.9}) {
    const auto full = clusters_at(r.tree, r.clocks, t).induced_partition();
    for (std::size_t m : {2u, 3u, 17u, 150u, 300u}) {
      const auto [tree, clocks] = prefix(r, m);
      EXPECT_EQ(clusters_at(tree, clocks, t).induced_partition(), restrict(full, m)) << "m=" << m;
    }
  }
}

TEST(Clusters, VisitsNDistinctPartitionsEndingInSingletons) {
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const std::size_t n = 9;
    const auto r = realize(n, 100 + rep);
    std::vector<double> eps;
    for (std::size_t i = 2; i <= n; ++i) eps.push_back(r.clocks.eps(i));
    std::sort(eps.begin(), eps.end());
    std::vector<double> probes{0.0};
    for (std::size_t i = 0; i + 1 < eps.size(); ++i) probes.push_back(0.5 * (eps[i] + eps[i + 1]));
    probes.push_back(eps.back() + 1.0);
    std::set<std::string> seen;
    for (double t : probes) seen.insert(clusters_at(r.tree, r.clocks, t).induced_partition().to_string());
    EXPECT_EQ(seen.size(), n);
    EXPECT_EQ(clusters_at(r.tree, r.clocks, probes.back()).induced_partition(), Partition::singletons(n));
  }
}

TEST(Subtree, RootSubtreeClusterIsTheRootCluster) {
  const auto r = realize(4000, 3);
  const auto s = clusters_at(r.tree, r.clocks, 0.8);
  EXPECT_EQ(subtree_cluster_size(r.tree, r.clocks, 1, 0.8), s.sizes[0]);
  // Vertex 2's subtree cluster is the cluster of 2 when its edge is cut, and
  // lies inside the root cluster otherwise.
  const auto s2 = subtree_cluster_size(r.tree, r.clocks, 2, 0.8);
  if (s.label[2] != 1) EXPECT_EQ(s2, s.sizes[s.label[2] - 1]);
  else EXPECT_LE(s2, s.sizes[0]);
}

TEST(Streaming, RootGridMatchesMaterialized) {
  const std::vector<double> grid{0.0, 0.1, 0.5, 1.0, 2.0};
  RootGridSampler sampler;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    auto rng = make_engine(2024, stream_id("rrt-test"), rep);
    const auto streamed = sampler(2500, grid, rng);
    const auto r = realize(2500, rep);
    PathMinima pm;
    root_path_minima(r.tree, r.clocks, pm);
    EXPECT_EQ(streamed, root_sizes_on_grid(pm, grid));
    for (std::size_t g = 0; g < grid.size(); ++g)
      EXPECT_EQ(streamed[g], clusters_at(r.tree, r.clocks, grid[g]).sizes[0]);
  }
}

TEST(Streaming, ClusterGridMatchesMaterialized) {
  const std::vector<double> grid{0.2, 0.7, 1.3};
  ClusterGridSampler sampler;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    auto rng = make_engine(2024, stream_id("rrt-test"), rep);
    const auto streamed = sampler(2500, grid, rng);
    const auto r = realize(2500, rep);
    for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_EQ(streamed[g], clusters_at(r.tree, r.clocks, grid[g]).sizes);
  }
}

TEST(Streaming, LeadingBlocksMatchMaterialized) {
  LeadingBlocksSampler sampler;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    for (std::size_t j : {1u, 2u, 5u, 254u}) {
      auto rng = make_engine(2024, stream_id("rrt-test"), rep);
      const auto streamed = sampler(2500, 0.9, j, rng);
      const auto r = realize(2500, rep);
      const auto sizes = clusters_at(r.tree, r.clocks, 0.9).sizes;
      const std::vector<std::uint64_t> head(sizes.begin(), sizes.begin() + std::min(j, sizes.size()));
      EXPECT_EQ(streamed, head) << "j=" << j;
    }
  }
  auto rng = make_engine(1, 1, 1);
  EXPECT_THROW(sampler(10, 1.0, 0, rng), std::invalid_argument);
  EXPECT_THROW(sampler(10, 1.0, 255, rng), std::invalid_argument);
}

TEST(Streaming, RootJumpsAgreeAcrossThreeRoutes) {
  RootJumpSampler sampler;
  RootJumpTracker tracker;
  std::vector<std::uint32_t> scratch;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    auto rng = make_engine(2024, stream_id("rrt-test"), rep);
    const auto streamed = sampler(3000, 1.5, rng);
    const auto r = realize(3000, rep);
    const auto backward = tracker(r.tree, r.clocks, 1.5);
    PathMinima pm;
    root_path_minima(r.tree, r.clocks, pm);
    EXPECT_EQ(streamed, backward);
    EXPECT_EQ(root_jumps_from_minima(pm, 1.5, scratch), backward);
    // Sizes chain and times increase.
    std::uint64_t size = 3000;
    double last = 0.0;
    for (const auto& j : backward) {
      EXPECT_EQ(j.size_before, size);
      EXPECT_LT(j.size_after, j.size_before);
      EXPECT_LT(j.log_drop, 0.0);
      EXPECT_GT(j.time, last);
      size = j.size_after;
      last = j.time;
    }
    EXPECT_EQ(size, clusters_at(r.tree, r.clocks, 1.5).sizes[0]);
  }
}

TEST(RootCluster, FiniteNMeanMatchesDepthRecursion) {
  // The depth recursion is an independent route to Γ(n+p)/(Γ(n)Γ(1+p)).
  for (double t : {0.3, 1.0}) {
    const double p = std::exp(-t);
    for (std::size_t n : {10u, 1000u, 100000u}) {
      const double closed = std::exp(log_gamma(n + p) - log_gamma(n) - log_gamma(1 + p));
      EXPECT_NEAR(root_cluster_mean(n, p) / closed, 1.0, 1e-9) << n;
    }
  }
  const std::vector<double> grid{0.7};
  RootGridSampler sampler;
  const std::size_t n = 1000;
  std::vector<double> sizes;
  for (std::uint64_t rep = 0; rep < 20000; ++rep) {
    auto rng = make_engine(99, stream_id("rrt-mean"), rep);
    sizes.push_back(static_cast<double>(sampler(n, grid, rng)[0]));
  }
  const auto m = sample_moments(sizes);
  EXPECT_LT(std::abs(m.mean - root_cluster_mean(n, std::exp(-0.7))) / m.stderr_, 4.0);
}

TEST(RootCluster, NormalizedMeanConvergesToMellinValue) {
  // Finite-n mean of n^{-p}|C_1| against the limit, on n = 10^2, 10^3, 10^4:
  // the exact finite-n gap shrinks, and the simulated mean tracks it.
  const double t = 1.0;
  const double p = std::exp(-t);
  const double limit = mellin_X1(1.0, t);
  double previous_gap = 1.0;
  RootGridSampler sampler;
  const std::vector<double> grid{t};
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double finite = weight_scale(n, t) * root_cluster_mean(n, p);
    const double gap = std::abs(finite - limit);
    EXPECT_LT(gap, previous_gap);
    previous_gap = gap;
    std::vector<double> w;
    for (std::uint64_t rep = 0; rep < 5000; ++rep) {
      auto rng = make_engine(5, stream_id("rrt-conv"), rep + 10 * n);
      w.push_back(weight_scale(n, t) * static_cast<double>(sampler(n, grid, rng)[0]));
    }
    const auto m = sample_moments(w);
    EXPECT_LT(std::abs(m.mean - finite) / m.stderr_, 4.0) << n;
  }
}

TEST(BlockMinima, FollowNegativeBinomialLaw) {
  // min Π_{j+1}(t) has law μ_{j,t}, checked on [n] with a pooled tail cell.
  const double t = 1.0;
  const std::size_t n = 80;
  const std::size_t reps = 20000;
  for (std::size_t j : {1u, 2u}) {
    const std::size_t K = j == 1 ? 8 : 10;
    std::vector<std::uint64_t> obs(K - j, 0);  // k = j+1..K-1, then k >= K
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      auto rng = make_engine(31, stream_id("mu-law"), rep);
      Realization r;
      r.resample(n, rng);
      const auto s = clusters_at(r.tree, r.clocks, t);
      std::size_t k = n + 1;
      for (std::size_t i = 1; i <= n; ++i)
        if (s.label[i] == j + 1) {
          k = i;
          break;
        }
      ++obs[std::min(k, K) - (j + 1)];
    }
    std::vector<double> probs;
    double acc = 0.0;
    for (std::size_t k = j + 1; k < K; ++k) {
      probs.push_back(mu_jt(j, t, k));
      acc += probs.back();
    }
    probs.push_back(1.0 - acc);
    EXPECT_GT(chi_square(obs, probs).p_value, 1e-3) << "j=" << j;
  }
}
