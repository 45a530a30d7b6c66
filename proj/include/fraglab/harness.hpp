#pragma once

// Monte Carlo checks of the tree simulator against exact values, the
// acceptance suite built from them, and its JSON/CSV reports.
//
// Every random check draws replica r of stream "name" from
// make_engine(seed, stream_id(name), r) and reduces in replica order, so a
// report depends on the seed only.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraglab/exact_dist.hpp"
#include "fraglab/ou_sim.hpp"
#include "fraglab/parallel.hpp"
#include "fraglab/rrt.hpp"
#include "fraglab/stats.hpp"
#include "fraglab/urn_rates.hpp"

namespace fraglab {

inline constexpr const char* report_schema = "frag-lab/1";
inline constexpr double test_level = 0.01;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ReportFormat { json, csv };

struct RunConfig {
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  std::size_t n = 1000000;
  std::optional<std::size_t> replicas;  // unset: per-check defaults
  std::vector<double> t_list;
  std::vector<double> q_list;
  std::string out;  // empty: standard output
  ReportFormat format = ReportFormat::json;
  bool timing = false;           // include runtimes (breaks byte-identity across runs)
  std::vector<int> criteria;     // empty: all
  bool reseed = true;            // rerun a single failing statistical check on a fresh seed

  void validate() const {
    if (threads == 0) throw ConfigError("threads must be at least 1");
    if (n < 2) throw ConfigError("n must be at least 2");
    if (replicas && *replicas == 0) throw ConfigError("replicas must be positive");
    for (double t : t_list)
      if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("times must be finite and nonnegative");
    for (double q : q_list)
      if (!(q >= 0.0) || !std::isfinite(q)) throw ConfigError("exponents must be finite and nonnegative");
    for (int c : criteria)
      if (c < 1 || c > 13) throw ConfigError("criteria are numbered 1..13");
  }

  std::size_t replicas_or(std::size_t fallback) const { return replicas.value_or(fallback); }
  bool wants(int criterion) const {
    return criteria.empty() || std::find(criteria.begin(), criteria.end(), criterion) != criteria.end();
  }
};

inline StreamKey stream(const RunConfig& cfg, const std::string& name) { return {cfg.seed, stream_id(name)}; }

// ---------------------------------------------------------------------------
// Per-replica observables of one tree on [n].

/// X̂_1 at each grid time.
inline std::vector<std::vector<double>> sample_root_weights(std::size_t n, std::span<const double> grid,
                                                            std::size_t replicas, unsigned threads, StreamKey key) {
  const std::vector<double> g(grid.begin(), grid.end());
  return run_replicas(replicas, threads, key, [] { return RootGridSampler{}; },
                      [&](RootGridSampler& s, std::size_t, Engine& rng) {
                        const auto sizes = s(n, g, rng);
                        std::vector<double> w(g.size());
                        for (std::size_t i = 0; i < g.size(); ++i) w[i] = weights_from_sizes({&sizes[i], 1}, n, g[i]).values[0];
                        return w;
                      });
}

/// Cluster weights in least-element order at each grid time.
template <class Reduce>
auto sample_cluster_weights(std::size_t n, std::span<const double> grid, std::size_t replicas, unsigned threads,
                            StreamKey key, Reduce reduce) {
  const std::vector<double> g(grid.begin(), grid.end());
  return run_replicas(replicas, threads, key, [] { return ClusterGridSampler{}; },
                      [&](ClusterGridSampler& s, std::size_t, Engine& rng) {
                        const auto sizes = s(n, g, rng);
                        std::vector<WeightEstimate> w;
                        w.reserve(g.size());
                        for (std::size_t i = 0; i < g.size(); ++i) w.push_back(weights_from_sizes(sizes[i], n, g[i]));
                        return reduce(w);
                      });
}

// ---------------------------------------------------------------------------
// Moments against exact values.

enum class MomentTarget { mellin_X1, rho_moment, total_q_moment, joint_mellin, c3_limit_moment };

inline std::string to_string(MomentTarget t) {
  switch (t) {
    case MomentTarget::mellin_X1: return "mellin_X1";
    case MomentTarget::rho_moment: return "rho_moment";
    case MomentTarget::total_q_moment: return "total_q_moment";
    case MomentTarget::joint_mellin: return "joint_mellin";
    case MomentTarget::c3_limit_moment: return "c3_limit_moment";
  }
  return "?";
}

inline MomentTarget parse_target(const std::string& s) {
  for (auto t : {MomentTarget::mellin_X1, MomentTarget::rho_moment, MomentTarget::total_q_moment,
                 MomentTarget::joint_mellin, MomentTarget::c3_limit_moment})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown moment target: " + s);
}

struct MomentQuery {
  MomentTarget target = MomentTarget::mellin_X1;
  double q = 1.0;
  double t = 1.0;
  double q2 = 0.0;        // joint_mellin: exponent of X_2
  std::size_t index = 2;  // rho_moment: vertex; c3_limit_moment: block
};

/// Sample mean of the target's observable over independent trees on [n],
/// with the exact value from exact-dist:
///   mellin_X1        X̂_1(t)^q                      Γ(q+1)/Γ(e^{-t}q+1)
///   rho_moment       (subtree cluster weight of i)^q  Γ(q+1)Γ(i)/Γ(e^{-t}q+i)
///   total_q_moment   Σ_i X̂_i(t)^q                   needs q > e^t
///   joint_mellin     X̂_1^q X̂_2^{q2}                 series, tail below 1e-10
///   c3_limit_moment  (k^{e^{-t}} X̂_k(t))^q          k^{e^{-t}q} E[X_k^q]
/// q = 0 in the single-exponent targets is exact: estimate 1, stderr 0.
inline MomentReport mc_moment(const RunConfig& cfg, const MomentQuery& mq, std::size_t replicas) {
  cfg.validate();
  if (replicas == 0) throw ConfigError("replicas must be positive");
  const std::size_t n = cfg.n;
  const double t = mq.t;
  if (!(t >= 0.0)) throw ConfigError("t must be nonnegative");
  const std::string label = to_string(mq.target);
  const auto key = stream(cfg, "mc_moment/" + label);
  const double grid[] = {t};

  if (mq.q == 0.0 && mq.target != MomentTarget::joint_mellin && mq.target != MomentTarget::total_q_moment) {
    const std::vector<double> ones(replicas, 1.0);
    return make_moment_report(label, ones, 1.0, n, t, 0.0);
  }
  switch (mq.target) {
    case MomentTarget::mellin_X1: {
      const auto w = sample_root_weights(n, grid, replicas, cfg.threads, key);
      std::vector<double> xs(replicas);
      for (std::size_t r = 0; r < replicas; ++r) xs[r] = std::pow(w[r][0], mq.q);
      return make_moment_report(label, xs, mellin_X1(mq.q, t), n, t, mq.q);
    }
    case MomentTarget::rho_moment: {
      if (mq.index < 1 || mq.index > n) throw ConfigError("rho_moment: vertex out of range");
      const auto xs = run_replicas(replicas, cfg.threads, key, [] { return Realization{}; },
                                   [&](Realization& real, std::size_t, Engine& rng) {
                                     real.resample(n, rng);
                                     return std::pow(subtree_cluster_weight(real.tree, real.clocks, mq.index, t), mq.q);
                                   });
      return make_moment_report(label, xs, rho_moment(mq.q, t, static_cast<double>(mq.index)), n, t, mq.q);
    }
    case MomentTarget::total_q_moment: {
      if (!(keep_probability(t) * mq.q > 1.0)) throw ConfigError("total_q_moment: requires q > e^t");
      const auto xs = sample_cluster_weights(n, grid, replicas, cfg.threads, key, [&](const std::vector<WeightEstimate>& w) {
        double s = 0.0;
        for (double x : w[0].values) s += std::pow(x, mq.q);
        return s;
      });
      return make_moment_report(label, xs, total_q_moment(mq.q, t), n, t, mq.q);
    }
    case MomentTarget::joint_mellin: {
      if (!(t > 0.0)) throw ConfigError("joint_mellin: t must be positive");
      const double scale = weight_scale(n, t);
      const auto xs = run_replicas(replicas, cfg.threads, key, [] { return LeadingBlocksSampler{}; },
                                   [&](LeadingBlocksSampler& smp, std::size_t, Engine& rng) {
                                     const auto b = smp(n, t, 2, rng);
                                     const double x2 = b.size() >= 2 ? scale * static_cast<double>(b[1]) : 0.0;
                                     return std::pow(scale * static_cast<double>(b[0]), mq.q) * std::pow(x2, mq.q2);
                                   });
      const auto exact = joint_mellin_to(JointMellinQuery{1, t, {mq.q, mq.q2}}, 1e-10).value;
      return make_moment_report(label, xs, exact, n, t, mq.q);
    }
    case MomentTarget::c3_limit_moment: {
      if (!(t > 0.0)) throw ConfigError("c3_limit_moment: t must be positive");
      const std::size_t k = mq.index;
      if (k < 1) throw ConfigError("c3_limit_moment: block index must be positive");
      if (k > 254) throw ConfigError("c3_limit_moment: block index at most 254");
      const double scale = std::exp(keep_probability(t) * std::log(static_cast<double>(k)));
      const double w = weight_scale(n, t);
      const auto xs = run_replicas(replicas, cfg.threads, key, [] { return LeadingBlocksSampler{}; },
                                   [&](LeadingBlocksSampler& smp, std::size_t, Engine& rng) {
                                     const auto b = smp(n, t, k, rng);
                                     return b.size() >= k ? std::pow(scale * w * static_cast<double>(b[k - 1]), mq.q) : 0.0;
                                   });
      const double exact = std::pow(scale, mq.q) * block_moment(k, mq.q, t);
      return make_moment_report(label, xs, exact, n, t, mq.q);
    }
  }
  throw ConfigError("unknown moment target");
}

// ---------------------------------------------------------------------------
// Verdict helpers.

inline TestVerdict ks_verdict(std::string name, const KsResult& ks, double level = test_level) {
  TestVerdict v;
  v.name = std::move(name);
  v.statistic = ks.statistic;
  v.p_value = ks.p_value;
  v.pass = ks.p_value >= level;
  return v;
}

inline TestVerdict exact_verdict(std::string name, bool ok, double statistic, std::string detail = {}) {
  TestVerdict v;
  v.name = std::move(name);
  v.statistic = statistic;
  v.exact_pass = ok;
  v.pass = ok;
  v.detail = std::move(detail);
  return v;
}

/// Monte Carlo estimate within a relative tolerance of the exact value. The
/// p-value is the two-sided normal tail of z, reported alongside.
inline TestVerdict tolerance_verdict(std::string name, const MomentReport& m, double rel_tol) {
  TestVerdict v;
  v.name = std::move(name);
  v.statistic = m.rel_error();
  v.p_value = m.z ? std::erfc(std::abs(*m.z) / std::sqrt(2.0)) : 1.0;
  v.pass = v.statistic <= rel_tol;
  std::ostringstream os;
  os.precision(6);
  os << "estimate " << m.estimate << " stderr " << m.stderr_ << " exact " << *m.exact << " tol " << rel_tol;
  v.detail = os.str();
  return v;
}

inline std::string format_number(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// First jump of the restricted chain.

struct FirstJump {
  double time;       // smallest clock among the edges of T|[n]
  std::uint32_t red;  // bitmask of π_2 (bit v-1 for label v)
};

/// First jump of Π|[n] from 1_[n]: the edge of T|[n] with the smallest clock
/// is removed, and π_2 is the subtree below it.
inline FirstJump first_jump(std::size_t n, Engine& rng) {
  if (n < 2 || n > 31) throw std::out_of_range("first_jump: need 2 <= n <= 31");
  std::array<Vertex, 32> parent{};
  std::uint32_t best_bits = 0;
  std::size_t best = 0;
  for (std::size_t i = 2; i <= n; ++i) {
    const auto e = draw_edge(rng, i);
    parent[i] = e.parent;
    if (best == 0 || e.survival_bits > best_bits) {
      best_bits = e.survival_bits;
      best = i;
    }
  }
  // Descendants of best have larger labels, so one ascending pass suffices.
  std::uint32_t red = 1u << (best - 1);
  for (std::size_t i = best + 1; i <= n; ++i)
    if (red & (1u << (parent[i] - 1))) red |= 1u << (i - 1);
  return {-std::log(EdgeDraw::survival_from_bits(best_bits)), red};
}

inline std::uint32_t red_mask(const Block& b) {
  std::uint32_t m = 0;
  for (auto v : b) m |= 1u << (v - 1);
  return m;
}

/// Chi-square of first-jump states over binary partitions of [n] against
/// rate_table(n)/(n-1). Throws InsufficientCounts when a cell expects fewer
/// than 5 draws.
inline TestVerdict chi2_first_jump(std::size_t n, std::size_t replicas, unsigned threads, StreamKey key) {
  if (n < 2 || n > 6) throw std::out_of_range("chi2_first_jump: need 2 <= n <= 6");
  const auto table = rate_table(n);
  const Rational total = table.total();
  std::map<std::uint32_t, std::size_t> cell;
  std::vector<double> probs;
  for (const auto& e : table.entries) {
    cell[red_mask(e.pi.block(2))] = probs.size();
    probs.push_back(static_cast<double>(e.value / total));
  }
  const auto draws = run_replicas(replicas, threads, key, [&](std::size_t, Engine& rng) { return first_jump(n, rng).red; });
  std::vector<std::uint64_t> counts(probs.size(), 0);
  for (auto m : draws) ++counts.at(cell.at(m));
  const std::string name = "first-jump law n=" + std::to_string(n);
  if (n == 2) return exact_verdict(name, counts[0] == replicas, 0.0, "single outcome");
  const auto chi = chi_square(counts, probs);
  TestVerdict v;
  v.name = name;
  v.statistic = chi.statistic;
  v.p_value = chi.p_value;
  v.pass = chi.p_value >= test_level;
  v.detail = "cells " + std::to_string(counts.size()) + " dof " + std::to_string(chi.dof);
  return v;
}

/// First-jump time of Π|[n] against Exp(n-1).
inline TestVerdict holding_time_check(std::size_t n, std::size_t replicas, unsigned threads, StreamKey key) {
  if (n < 2) throw std::out_of_range("holding_time_check: n must be at least 2");
  auto times = run_replicas(replicas, threads, key, [&](std::size_t, Engine& rng) { return first_jump(n, rng).time; });
  const double rate = static_cast<double>(n - 1);
  auto v = ks_verdict("holding time n=" + std::to_string(n),
                      ks_one_sample(std::move(times), [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); }));
  return v;
}

// ---------------------------------------------------------------------------
// Semigroup and composition.

/// Two-sample KS between X̂_1(s+t) and X̂_1(s)^{e^{-t}} X̂_1'(t), all three
/// from independent trees on [n].
inline TestVerdict markov_weight_semigroup_check(double s, double t, const RunConfig& cfg, std::size_t replicas) {
  if (!(s >= 0.0) || !(t > 0.0)) throw std::domain_error("markov_weight_semigroup_check: need s >= 0, t > 0");
  const double st[] = {s + t};
  const double ss[] = {s};
  const double tt[] = {t};
  const auto direct = sample_root_weights(cfg.n, st, replicas, cfg.threads, stream(cfg, "semigroup/direct"));
  const auto left = sample_root_weights(cfg.n, ss, replicas, cfg.threads, stream(cfg, "semigroup/left"));
  const auto right = sample_root_weights(cfg.n, tt, replicas, cfg.threads, stream(cfg, "semigroup/right"));
  std::vector<double> a(replicas);
  std::vector<double> b(replicas);
  const double p = keep_probability(t);
  for (std::size_t r = 0; r < replicas; ++r) {
    a[r] = direct[r][0];
    b[r] = std::pow(left[r][0], p) * right[r][0];
  }
  return ks_verdict("semigroup product s=" + format_number(s) + " t=" + format_number(t), ks_two_sample(a, b));
}

/// Top k cluster sizes of Π(s+t)|[n] obtained by fragmenting each block of
/// Π(s)|[n] with an independent Π(t) on a tree of the block's size. Blocks no
/// larger than the current k-th largest fragment are skipped, since their
/// fragments cannot enter the top k.
class ComposedSampler {
 public:
  std::vector<std::uint64_t> operator()(std::size_t n, double s, double t, std::size_t k, Engine& rng) {
    const double gs[] = {s};
    const double gt[] = {t};
    auto blocks = outer_(n, gs, rng)[0];
    std::sort(blocks.begin(), blocks.end(), std::greater<>());
    std::vector<std::uint64_t> top;
    for (auto b : blocks) {
      if (top.size() >= k && b <= top.back()) break;
      if (b == 1) {
        top.push_back(1);
      } else {
        const auto parts = inner_(b, gt, rng)[0];
        top.insert(top.end(), parts.begin(), parts.end());
      }
      std::sort(top.begin(), top.end(), std::greater<>());
      if (top.size() > k) top.resize(k);
    }
    return top;
  }

 private:
  ClusterGridSampler outer_;
  ClusterGridSampler inner_;
};

/// Two-sample KS per rank between the top three weights of Π(s+t) sampled
/// directly and by composition; the verdict uses the Bonferroni p-value.
inline TestVerdict composition_check(double s, double t, const RunConfig& cfg, std::size_t replicas) {
  constexpr std::size_t k = 3;
  const double st[] = {s + t};
  const double scale = weight_scale(cfg.n, s + t);
  auto direct = run_replicas(replicas, cfg.threads, stream(cfg, "composition/direct"), [] { return ClusterGridSampler{}; },
                             [&](ClusterGridSampler& smp, std::size_t, Engine& rng) {
                               auto sizes = smp(cfg.n, st, rng)[0];
                               std::sort(sizes.begin(), sizes.end(), std::greater<>());
                               sizes.resize(k, 0);
                               return sizes;
                             });
  auto composed = run_replicas(replicas, cfg.threads, stream(cfg, "composition/composed"), [] { return ComposedSampler{}; },
                               [&](ComposedSampler& smp, std::size_t, Engine& rng) {
                                 auto sizes = smp(cfg.n, s, t, k, rng);
                                 sizes.resize(k, 0);
                                 return sizes;
                               });
  double worst_p = 1.0;
  double worst_d = 0.0;
  for (std::size_t rank = 0; rank < k; ++rank) {
    std::vector<double> a(replicas);
    std::vector<double> b(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
      a[r] = scale * static_cast<double>(direct[r][rank]);
      b[r] = scale * static_cast<double>(composed[r][rank]);
    }
    const auto ks = ks_two_sample(a, b);
    if (ks.p_value < worst_p) {
      worst_p = ks.p_value;
      worst_d = ks.statistic;
    }
  }
  TestVerdict v;
  v.name = "composition top-3 s=" + format_number(s) + " t=" + format_number(t);
  v.statistic = worst_d;
  v.p_value = std::min(1.0, static_cast<double>(k) * worst_p);
  v.pass = *v.p_value >= test_level;
  v.detail = "Bonferroni over 3 ranks";
  return v;
}

// ---------------------------------------------------------------------------
// Largest block.

/// P(X̂_1(t) > X̂_i(t) for all i >= 2) at each time of grid, from common trees.
inline std::vector<MomentReport> largest_block_probability(std::span<const double> grid, const RunConfig& cfg,
                                                           std::size_t replicas) {
  for (double t : grid)
    if (!(t > 0.0)) throw std::domain_error("largest_block_probability: t must be positive");
  const auto wins = sample_cluster_weights(cfg.n, grid, replicas, cfg.threads, stream(cfg, "largest_block"),
                                           [](const std::vector<WeightEstimate>& w) {
                                             std::vector<double> out;
                                             for (const auto& e : w) {
                                               const auto& v = e.values;
                                               const bool first = std::all_of(v.begin() + 1, v.end(), [&](double x) { return x < v[0]; });
                                               out.push_back(first ? 1.0 : 0.0);
                                             }
                                             return out;
                                           });
  std::vector<MomentReport> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> xs(replicas);
    for (std::size_t r = 0; r < replicas; ++r) xs[r] = wins[r][g];
    out.push_back(make_moment_report("largest_block", xs, std::nullopt, cfg.n, grid[g], 0.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::json to_json(const TestVerdict& v, bool timing) {
  nlohmann::json j{{"name", v.name}, {"criterion", v.criterion}, {"statistic", v.statistic}};
  j["p_value"] = v.p_value ? nlohmann::json(*v.p_value) : nlohmann::json(nullptr);
  j["exact_pass"] = v.exact_pass ? nlohmann::json(*v.exact_pass) : nlohmann::json(nullptr);
  j["pass"] = v.pass;
  j["reseeded"] = v.reseeded;
  if (timing) j["runtime"] = v.runtime;
  j["detail"] = v.detail;
  return j;
}

inline nlohmann::json to_json(const MomentReport& m) {
  return {{"label", m.label},
          {"estimate", m.estimate},
          {"stderr", m.stderr_},
          {"exact", m.exact ? nlohmann::json(*m.exact) : nlohmann::json(nullptr)},
          {"z", m.z ? nlohmann::json(*m.z) : nlohmann::json(nullptr)},
          {"n", m.n},
          {"replicas", m.replicas},
          {"t", m.t},
          {"q", m.q}};
}

inline nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j{{"seed", cfg.seed}, {"n", cfg.n}, {"t", cfg.t_list}, {"q", cfg.q_list}};
  j["replicas"] = cfg.replicas ? nlohmann::json(*cfg.replicas) : nlohmann::json(nullptr);
  return j;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

inline std::string verdicts_csv(const std::vector<TestVerdict>& vs, bool timing) {
  std::string out = "name,criterion,statistic,p_value,exact_pass,pass,reseeded";
  out += timing ? ",runtime,detail\n" : ",detail\n";
  for (const auto& v : vs) {
    out += detail::csv_escape(v.name) + "," + std::to_string(v.criterion) + "," + detail::csv_number(v.statistic) + ",";
    out += (v.p_value ? detail::csv_number(*v.p_value) : "") + ",";
    out += std::string(v.exact_pass ? (*v.exact_pass ? "true" : "false") : "") + ",";
    out += std::string(v.pass ? "true" : "false") + "," + (v.reseeded ? "true" : "false") + ",";
    if (timing) out += detail::csv_number(v.runtime) + ",";
    out += detail::csv_escape(v.detail) + "\n";
  }
  return out;
}

inline std::string moments_csv(const std::vector<MomentReport>& ms) {
  std::string out = "label,estimate,stderr,exact,z,n,replicas,t,q\n";
  for (const auto& m : ms) {
    out += detail::csv_escape(m.label) + "," + detail::csv_number(m.estimate) + "," + detail::csv_number(m.stderr_) + ",";
    out += (m.exact ? detail::csv_number(*m.exact) : "") + "," + (m.z ? detail::csv_number(*m.z) : "") + ",";
    out += std::to_string(m.n) + "," + std::to_string(m.replicas) + "," + detail::csv_number(m.t) + "," +
           detail::csv_number(m.q) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Acceptance suite.

struct SuiteResult {
  std::vector<TestVerdict> verdicts;
  std::vector<MomentReport> moments;
  bool pass = false;
  std::size_t statistical_failures = 0;  // before any reseed

  /// Verdicts of one criterion all pass.
  bool criterion_pass(int c) const {
    bool any = false;
    for (const auto& v : verdicts) {
      if (v.criterion != c) continue;
      any = true;
      if (!v.pass) return false;
    }
    return any;
  }
};

/// One criterion: a function of the seed producing verdicts (and moments).
struct SuiteCheck {
  int criterion;
  std::string name;
  std::function<void(const RunConfig&, std::vector<TestVerdict>&, std::vector<MomentReport>&)> run;
};

namespace detail {

inline double clock_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace detail

inline std::vector<SuiteCheck> acceptance_checks();

/// Runs the selected criteria. Exact checks must all pass. Statistical checks
/// run at level 0.01; at most one may fail, and the check holding it is rerun
/// on a fresh seed and must then pass.
inline SuiteResult run_acceptance_suite(const RunConfig& cfg) {
  cfg.validate();
  SuiteResult res;
  const auto checks = acceptance_checks();
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // verdict range of each check that ran
  std::vector<std::size_t> ran;
  for (std::size_t c = 0; c < checks.size(); ++c) {
    if (!cfg.wants(checks[c].criterion)) continue;
    const double t0 = detail::clock_seconds();
    const std::size_t first = res.verdicts.size();
    checks[c].run(cfg, res.verdicts, res.moments);
    const double dt = detail::clock_seconds() - t0;
    for (std::size_t i = first; i < res.verdicts.size(); ++i) {
      res.verdicts[i].criterion = checks[c].criterion;
      res.verdicts[i].runtime = dt;
    }
    spans.emplace_back(first, res.verdicts.size());
    ran.push_back(c);
  }
  bool exact_ok = true;
  std::vector<std::size_t> failed;
  for (std::size_t i = 0; i < res.verdicts.size(); ++i) {
    const auto& v = res.verdicts[i];
    if (v.pass) continue;
    if (v.statistical()) failed.push_back(i); else exact_ok = false;
  }
  res.statistical_failures = failed.size();
  if (failed.size() == 1 && cfg.reseed) {
    // Rerun the owning check on a derived seed and replace its verdicts.
    std::size_t owner = 0;
    while (!(spans[owner].first <= failed[0] && failed[0] < spans[owner].second)) ++owner;
    RunConfig again = cfg;
    again.seed = substream_seed(cfg.seed, stream_id("reseed"), 0);
    std::vector<TestVerdict> vs;
    std::vector<MomentReport> ms;
    const double t0 = detail::clock_seconds();
    checks[ran[owner]].run(again, vs, ms);
    const double dt = detail::clock_seconds() - t0;
    const std::size_t base = spans[owner].first;
    if (vs.size() == spans[owner].second - base) {
      for (std::size_t i = 0; i < vs.size(); ++i) {
        vs[i].criterion = checks[ran[owner]].criterion;
        vs[i].runtime = dt;
        vs[i].reseeded = true;
        if (!vs[i].pass && !vs[i].statistical()) exact_ok = false;
        res.verdicts[base + i] = vs[i];
      }
      failed.clear();
      for (std::size_t i = base; i < base + vs.size(); ++i)
        if (!res.verdicts[i].pass) failed.push_back(i);
    }
  }
  res.pass = exact_ok && failed.empty();
  return res;
}

inline nlohmann::json to_json(const SuiteResult& r, const RunConfig& cfg) {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : r.verdicts) vs.push_back(to_json(v, cfg.timing));
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : r.moments) ms.push_back(to_json(m));
  return {{"schema", report_schema},
          {"config", config_json(cfg)},
          {"verdicts", std::move(vs)},
          {"moments", std::move(ms)},
          {"statistical_failures", r.statistical_failures},
          {"pass", r.pass}};
}

inline std::string render_report(const SuiteResult& r, const RunConfig& cfg) {
  if (cfg.format == ReportFormat::csv) return verdicts_csv(r.verdicts, cfg.timing);
  return to_json(r, cfg).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// The criteria.

namespace detail {

inline void add(std::vector<TestVerdict>& out, TestVerdict v) { out.push_back(std::move(v)); }

/// Sizes used by the suite at the default configuration.
struct SuiteSizes {
  // moments, total_moment and joint run above the nominal 500, 500 and 1000:
  // at those counts one standard error is about the size of the relative
  // tolerance (3%, 5%, 5%); here the tolerance is about 3 standard errors.
  static constexpr std::size_t moments = 20000;
  static constexpr std::size_t ml_law = 2000;
  static constexpr std::size_t total_moment = 6000;
  static constexpr std::size_t ou_paths = 100000;
  static constexpr std::size_t ou_ks = 2000;
  static constexpr std::size_t jumps = 10000;
  static constexpr std::size_t first_jump = 100000;
  static constexpr std::size_t semigroup = 1000;
  static constexpr std::size_t joint = 20000;
  static constexpr std::size_t largest = 2000;
};

inline void criterion_rates(const RunConfig&, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  bool totals = true;
  for (std::size_t n = 2; n <= 10; ++n) totals = totals && rate_table(n).total() == Rational(n - 1);
  add(out, exact_verdict("rate_table total = n-1, n=2..10", totals, 0.0));
  bool masses = true;
  for (std::size_t n = 2; n <= 10; ++n)
    for (std::size_t k = 2; k <= n; ++k) masses = masses && pk_total_mass(k, n) == Rational(1);
  add(out, exact_verdict("urn masses sum to 1, 2<=k<=n<=10", masses, 0.0));
}

inline void criterion_theta(const RunConfig&, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  std::size_t bad_general = 0;
  std::size_t bad_mm = 0;
  std::size_t checked = 0;
  for (std::size_t j = 1; j <= 4; ++j) {
    for (std::size_t k = j; k <= 8; ++k) {
      const auto table = theta_bruteforce_table(j, k);
      for_each_composition(k, j, [&](const std::vector<std::size_t>& ks) {
        const auto it = table.find(ks);
        const Rational brute = it == table.end() ? Rational(0) : it->second;
        ++checked;
        if (theta_general(ThetaQuery{ks}) != brute) ++bad_general;
        if (j == 2 && theta_meir_moon(k, ks[0], ks[1]) != brute) ++bad_mm;
      });
    }
  }
  add(out, exact_verdict("theta_general = brute force, j<=4, k<=8", bad_general == 0, static_cast<double>(bad_general),
                         std::to_string(checked) + " compositions"));
  add(out, exact_verdict("theta_meir_moon = brute force, k<=8", bad_mm == 0, static_cast<double>(bad_mm)));
}

inline void criterion_ml_moments(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  const double grid[] = {0.5, std::numbers::ln2};
  const auto w = sample_root_weights(cfg.n, grid, cfg.replicas_or(SuiteSizes::moments), cfg.threads,
                                     stream(cfg, "ml_moments"));
  for (std::size_t g = 0; g < 2; ++g) {
    for (double q : {1.0, 2.0}) {
      std::vector<double> xs(w.size());
      for (std::size_t r = 0; r < w.size(); ++r) xs[r] = std::pow(w[r][g], q);
      auto m = make_moment_report("mellin_X1", xs, mellin_X1(q, grid[g]), cfg.n, grid[g], q);
      add(out, tolerance_verdict("E X1^q, t=" + format_number(grid[g]) + " q=" + format_number(q), m, 0.03));
      ms.push_back(std::move(m));
    }
  }
}

inline void criterion_ml_law(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  const double t = 0.5;
  const double grid[] = {t};
  const auto w = sample_root_weights(cfg.n, grid, cfg.replicas_or(SuiteSizes::ml_law), cfg.threads, stream(cfg, "ml_law"));
  std::vector<double> xs(w.size());
  for (std::size_t r = 0; r < w.size(); ++r) xs[r] = w[r][0];
  const double upper = 15.0;
  const MittagLefflerCdf cdf(t, upper);
  add(out, ks_verdict("KS X1(0.5) vs density quadrature", ks_one_sample(xs, cdf)));
  const double mass = ml_cdf(40.0, t);
  const double tail = ml_tail_bound(40.0, t);
  add(out, exact_verdict("density integrates to 1", std::abs(mass - 1.0) <= 1e-6 && tail <= 1e-6, std::abs(mass - 1.0),
                         "mass on [0,40] " + detail::csv_number(mass) + ", moment tail bound " + format_number(tail)));
}

inline void criterion_total_moment(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  for (auto [q, t] : {std::pair{3.0, std::numbers::ln2}, std::pair{4.0, 1.0}}) {
    const double closed = total_q_moment(q, t);
    const auto series = total_q_moment_series(q, t);
    const double diff = std::abs(series.value - closed);
    add(out, exact_verdict("total_q_moment closed vs series, q=" + format_number(q) + " t=" + format_number(t),
                           diff <= 1e-8, diff));
  }
  MomentQuery mq{MomentTarget::total_q_moment, 3.0, std::numbers::ln2};
  auto m = mc_moment(cfg, mq, cfg.replicas_or(SuiteSizes::total_moment));
  add(out, tolerance_verdict("MC sum X_i^3 at ln 2", m, 0.05));
  ms.push_back(std::move(m));
}

inline void criterion_ou(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  const auto lc = build_config(1e-3, 1.0, true);
  const std::size_t paths = cfg.replicas_or(SuiteSizes::ou_paths);
  const auto mgf = run_replicas(paths, cfg.threads, stream(cfg, "ou/mgf"),
                                [&](std::size_t, Engine& rng) { return std::exp(simulate_ou(lc, 1.0, rng)); });
  auto m = make_moment_report("ou_mgf", mgf, ou_mgf_exact(1.0, 1.0), paths, 1.0, 1.0);
  m.n = 0;
  add(out, tolerance_verdict("E exp U(1), delta=1e-3", m, 0.02));
  ms.push_back(std::move(m));
  const double grid[] = {0.5, 1.0};
  const std::size_t reps = cfg.replicas_or(SuiteSizes::ou_ks);
  const auto w = sample_root_weights(cfg.n, grid, reps, cfg.threads, stream(cfg, "ou/trees"));
  for (std::size_t g = 0; g < 2; ++g) {
    const auto u = run_replicas(reps, cfg.threads, stream(cfg, "ou/paths/" + std::to_string(g)),
                                [&](std::size_t, Engine& rng) { return simulate_ou(lc, grid[g], rng); });
    std::vector<double> y(reps);
    for (std::size_t r = 0; r < reps; ++r) y[r] = std::log(w[r][g]);
    add(out, ks_verdict("KS ln X1(t) vs U(t), t=" + format_number(grid[g]), ks_two_sample(y, u)));
  }
}

inline void criterion_cumulant(const RunConfig&, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  double worst = 0.0;
  for (double q : {0.5, 1.0, 2.0, 5.0}) worst = std::max(worst, std::abs(kappa(q) - kappa_levy_khintchine(q)));
  add(out, exact_verdict("kappa = Levy-Khintchine quadrature", worst <= 1e-6, worst));
  double worst_int = 0.0;
  for (double q : {0.5, 1.0, 2.0, 5.0})
    for (double t : {0.3, 0.7, 1.2, 2.0})
      worst_int = std::max(worst_int, std::abs(integrated_kappa(q, t) - std::log(mellin_X1(q, t))));
  add(out, exact_verdict("integrated kappa = ln mellin_X1", worst_int <= 1e-8, worst_int));
}

inline void criterion_jumps(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  const double threshold = 0.5;
  const auto counts = run_replicas(cfg.replicas_or(SuiteSizes::jumps), cfg.threads, stream(cfg, "jumps"),
                                   [] { return RootJumpSampler{}; }, [&](RootJumpSampler& s, std::size_t, Engine& rng) {
                                     double c = 0.0;
                                     for (const auto& j : s(cfg.n, 1.0, rng))
                                       if (-j.log_drop >= threshold) c += 1.0;
                                     return c;
                                   });
  auto m = make_moment_report("root_jumps_ge_0.5", counts, lambda_tail(threshold), cfg.n, 1.0, threshold);
  add(out, tolerance_verdict("mean count of log-drops >= 0.5 on [0,1]", m, 0.05));
  ms.push_back(std::move(m));
}

inline void criterion_first_jump(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  const std::size_t reps = cfg.replicas_or(SuiteSizes::first_jump);
  for (std::size_t n : {3, 4, 5}) {
    try {
      add(out, chi2_first_jump(n, reps, cfg.threads, stream(cfg, "first_jump/" + std::to_string(n))));
    } catch (const InsufficientCounts& e) {
      TestVerdict v = exact_verdict("first-jump law n=" + std::to_string(n), false, 0.0, e.what());
      out.push_back(v);
    }
    add(out, holding_time_check(n, reps, cfg.threads, stream(cfg, "holding/" + std::to_string(n))));
  }
}

inline void criterion_semigroup(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  double worst = 0.0;
  for (double q : {0.5, 1.0, 2.0, 4.0})
    for (double s : {0.3, 0.7, 1.2})
      for (double t : {0.3, 0.7, 1.2}) {
        const double lhs = mellin_X1(q, s + t);
        const double rhs = mellin_X1(q * keep_probability(t), s) * mellin_X1(q, t);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
      }
  add(out, exact_verdict("Mellin factorization", worst <= 1e-12, worst));
  const std::size_t reps = cfg.replicas_or(SuiteSizes::semigroup);
  add(out, markov_weight_semigroup_check(0.5, 0.5, cfg, reps));
  add(out, composition_check(0.4, 0.4, cfg, reps));
}

inline void criterion_joint(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  double worst = 0.0;
  for (double q : {0.5, 1.0, 2.0, 3.0})
    for (double t : {0.3, 0.7, 1.5}) {
      const auto jm = joint_mellin_to(JointMellinQuery{1, t, {q, 0.0}}, 1e-10);
      worst = std::max(worst, std::abs(jm.value - mellin_X1(q, t)));
    }
  add(out, exact_verdict("joint_mellin(j=1, q2=0) = mellin_X1", worst <= 1e-6, worst));
  MomentQuery mq{MomentTarget::joint_mellin, 1.0, 0.7, 2.0};
  auto m = mc_moment(cfg, mq, cfg.replicas_or(SuiteSizes::joint));
  add(out, tolerance_verdict("MC E[X1 X2^2] at t=0.7", m, 0.05));
  ms.push_back(std::move(m));
}

inline void criterion_asymptotics(const RunConfig& cfg, std::vector<TestVerdict>& out, std::vector<MomentReport>& ms) {
  double worst_c3 = 0.0;
  for (double q : {1.0, 2.0})
    for (double t : {0.5, 1.0}) {
      const double lim = c3_limit_moment(q, t);
      worst_c3 = std::max(worst_c3, std::abs(c3_finite_moment(q, t, 1e6) - lim) / lim);
    }
  add(out, exact_verdict("c3 finite-n moment within 1% of limit at n=1e6", worst_c3 <= 0.01, worst_c3));

  const double grid[] = {0.05, 0.1, 0.2, 1.0};
  const auto lb = largest_block_probability(grid, cfg, cfg.replicas_or(SuiteSizes::largest));
  for (const auto& m : lb) ms.push_back(m);
  {
    // One-sided test of P >= 0.95 at t = 0.05.
    const auto& m = lb[0];
    const double z = m.stderr_ > 0.0 ? (m.estimate - 0.95) / m.stderr_ : (m.estimate >= 0.95 ? 0.0 : -INFINITY);
    TestVerdict v;
    v.name = "largest block P >= 0.95 at t=0.05";
    v.statistic = m.estimate;
    v.p_value = 0.5 * std::erfc(-z / std::sqrt(2.0));
    v.pass = *v.p_value >= test_level;
    v.detail = "estimate " + format_number(m.estimate) + " stderr " + format_number(m.stderr_);
    out.push_back(v);
  }
  {
    // Disjoint 99% intervals: t=0.05 above t=1.0, and increasing as t decreases.
    auto lo = [](const MomentReport& m) { return m.estimate - 2.576 * m.stderr_; };
    auto hi = [](const MomentReport& m) { return m.estimate + 2.576 * m.stderr_; };
    const bool above = lo(lb[0]) > hi(lb[3]);
    const bool trend = lb[0].estimate > lb[1].estimate && lb[1].estimate > lb[2].estimate && lo(lb[0]) > hi(lb[2]);
    TestVerdict v;
    v.name = "largest block trend over t = 0.2, 0.1, 0.05";
    v.statistic = lb[0].estimate - lb[2].estimate;
    v.p_value = (above && trend) ? 1.0 : 0.0;
    v.pass = above && trend;
    v.detail = "P(0.05)=" + format_number(lb[0].estimate) + " P(0.1)=" + format_number(lb[1].estimate) +
               " P(0.2)=" + format_number(lb[2].estimate) + " P(1)=" + format_number(lb[3].estimate);
    out.push_back(v);
  }
  double worst_lim = 0.0;
  for (double q : {0.5, 1.0, 2.0, 4.0}) {
    const double gap = std::abs(mellin_X1(q, 40.0) - std::exp(log_gamma(q + 1.0))) / std::exp(log_gamma(q + 1.0));
    worst_lim = std::max(worst_lim, gap);
  }
  add(out, exact_verdict("mellin_X1(q, t) -> Gamma(q+1) as t grows", worst_lim <= 1e-12, worst_lim, "t = 40"));
}

inline void criterion_divergence(const RunConfig&, std::vector<TestVerdict>& out, std::vector<MomentReport>&) {
  auto first_moment = [](double, double x) { return x; };
  double worst = 0.0;
  double prev = 0.0;
  bool growing = true;
  for (double d : {1e-2, 1e-4, 1e-6}) {
    const double v = freq_integral_truncated(first_moment, d);
    worst = std::max(worst, std::abs(v - std::log(1.0 / d)));
    growing = growing && v > prev;
    prev = v;
  }
  bool flagged = false;
  try {
    (void)freq_integral(first_moment);
  } catch (const DivergentIntegral&) {
    flagged = true;
  }
  add(out, exact_verdict("truncated integral of x . x^-2 grows like ln(1/delta)", growing && worst <= 1e-9 && flagged,
                         worst, flagged ? "untruncated integral reported divergent" : "untruncated integral not flagged"));
}

}  // namespace detail

inline std::vector<SuiteCheck> acceptance_checks() {
  return {
      {1, "exact rate identities", detail::criterion_rates},
      {2, "theta oracle equivalence", detail::criterion_theta},
      {3, "Mittag-Leffler moments", detail::criterion_ml_moments},
      {4, "Mittag-Leffler law", detail::criterion_ml_law},
      {5, "mean-intensity identity", detail::criterion_total_moment},
      {6, "OU cross-validation", detail::criterion_ou},
      {7, "cumulant identities", detail::criterion_cumulant},
      {8, "jump statistics", detail::criterion_jumps},
      {9, "first-jump law and holding time", detail::criterion_first_jump},
      {10, "semigroup checks", detail::criterion_semigroup},
      {11, "joint Mellin consistency", detail::criterion_joint},
      {12, "asymptotics", detail::criterion_asymptotics},
      {13, "divergence demonstration", detail::criterion_divergence},
  };
}

}  // namespace fraglab
