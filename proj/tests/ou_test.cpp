#include <gtest/gtest.h>

#include "fraglab/exact_dist.hpp"
#include "fraglab/ou_sim.hpp"
#include "fraglab/stats.hpp"

using namespace fraglab;

namespace {

// ln E[e^{qU(t)}] for the truncated process: ∫_0^t κ_δ(q e^{-s}) ds.
double truncated_log_mgf(const LevyConfig& cfg, double q, double t) {
  return integrate([&](double s) { return truncated_kappa(cfg, q * std::exp(-s)); }, 0.0, t, 1e-10).value;
}

}  // namespace

TEST(LevyConfig, KnownValues) {
  const auto c = build_config(std::log(2.0), 1.0, true);
  EXPECT_NEAR(c.jump_rate, 1.0, 1e-15);
  EXPECT_NEAR(sample_jump_magnitude(c, 0.5), std::log(3.0), 1e-15);
  EXPECT_THROW(build_config(0.0, 1.0, true), std::domain_error);
  EXPECT_THROW(build_config(1.5, 1.0, true), std::domain_error);
  EXPECT_THROW(build_config(0.1, 0.0, true), std::domain_error);
  EXPECT_THROW(sample_jump_magnitude(c, 1.0), std::domain_error);
}

TEST(LevyConfig, CompensatorAndVarianceQuadratures) {
  for (double d : {1.0, 0.1, 1e-3}) {
    // ∫_δ^∞ y e^{-y}/(1-e^{-y})² dy = δ/(e^δ-1) - ln(1-e^{-δ}).
    EXPECT_NEAR(large_jump_compensator(d), d / std::expm1(d) - std::log(-std::expm1(-d)), 1e-10);
    // y² e^{-y}/(1-e^{-y})² = ((y/2)/sinh(y/2))².
    const double v = integrate([](double y) {
      if (y == 0.0) return 1.0;
      const double r = 0.5 * y / std::sinh(0.5 * y);
      return r * r;
    }, 0.0, d, 1e-13).value;
    EXPECT_NEAR(small_jump_variance(d) / v, 1.0, 1e-11);
    const auto c = build_config(d, 1.0, true);
    EXPECT_NEAR(c.drift, -euler_gamma + large_jump_compensator(d), 1e-14);
    EXPECT_NEAR(c.sigma_delta * c.sigma_delta, v, 1e-12);
  }
}

TEST(JumpMagnitude, TailLawKs) {
  const auto c = build_config(0.2, 1.0, true);
  auto rng = make_engine(3, stream_id("ou-jumps"), 0);
  std::vector<double> ys(5000);
  for (auto& y : ys) y = sample_jump_magnitude(c, uniform_open(rng));
  for (double y : ys) EXPECT_GE(y, c.delta);
  // P(Y <= y) = 1 - (e^δ - 1)/(e^y - 1).
  const auto ks = ks_one_sample(ys, [&](double y) { return 1.0 - std::expm1(c.delta) / std::expm1(y); });
  EXPECT_GT(ks.p_value, 1e-3);
}

TEST(TruncatedCumulant, ApproachesKappaAsDeltaShrinks) {
  for (double q : {0.5, 1.0, 2.0}) {
    double prev_corrected = 1e9, prev_plain = 1e9;
    for (double d : {0.1, 0.01, 0.001}) {
      const double corrected = std::abs(truncated_kappa(build_config(d, 1.0, true), q) - kappa(q));
      const double plain = std::abs(truncated_kappa(build_config(d, 1.0, false), q) - kappa(q));
      EXPECT_LT(corrected, prev_corrected);
      EXPECT_LT(plain, prev_plain);
      EXPECT_LT(corrected, plain);
      prev_corrected = corrected;
      prev_plain = plain;
    }
    EXPECT_LT(prev_corrected, 1e-6);
  }
}

TEST(TruncatedCumulant, LogMgfGapShrinksWithDelta) {
  double prev = 1e9;
  for (double d : {0.1, 0.01, 0.001}) {
    const double gap = std::abs(truncated_log_mgf(build_config(d, 1.0, true), 1.0, 1.0) - std::log(ou_mgf_exact(1.0, 1.0)));
    EXPECT_LT(gap, prev);
    prev = gap;
  }
}

TEST(SimulateOu, MgfMatchesTruncatedLaw) {
  // The simulator is exact for the truncated process, so its MGF is tested
  // against ∫κ_δ at a coarse δ, with and without the Gaussian surrogate.
  for (bool gauss : {true, false}) {
    const auto c = build_config(0.1, 1.0, gauss);
    std::vector<double> e;
    for (std::uint64_t r = 0; r < 40000; ++r) {
      auto rng = make_engine(17, stream_id("ou-mgf"), r);
      e.push_back(std::exp(simulate_ou(c, 1.0, rng)));
    }
    const auto m = sample_moments(e);
    const double exact = std::exp(truncated_log_mgf(c, 1.0, 1.0));
    EXPECT_LT(std::abs(m.mean - exact) / m.stderr_, 4.0) << gauss;
  }
}

TEST(SimulateOu, PathWithoutJumpsFollowsRelaxation) {
  auto c = build_config(0.5, 2.0, false);
  c.jump_rate = 1e-300;
  auto rng = make_engine(1, 1, 1);
  const std::vector<double> grid{0.25, 1.0, 2.0};
  const auto path = simulate_ou_path(c, grid, rng);
  ASSERT_EQ(path.values.size(), 3u);
  EXPECT_TRUE(path.jumps.empty());
  for (std::size_t g = 0; g < 3; ++g) EXPECT_NEAR(path.values[g], c.drift * -std::expm1(-grid[g]), 1e-14);
}

TEST(SimulateOu, JumpsAreNegative) {
  const auto c = build_config(0.05, 3.0, true);
  const std::vector<double> grid{1.0, 2.0, 3.0};
  std::size_t total = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    auto rng = make_engine(4, stream_id("ou-neg"), r);
    const auto path = simulate_ou_path(c, grid, rng);
    for (double j : path.jumps) EXPECT_LE(j, -c.delta);
    EXPECT_TRUE(std::is_sorted(path.times.begin(), path.times.end()));
    total += path.jumps.size();
  }
  EXPECT_GT(total, 0u);
}

TEST(SimulateOu, PathEndpointHasTerminalLaw) {
  const auto c = build_config(0.05, 1.0, true);
  const std::vector<double> grid{0.3, 0.6, 1.0};
  std::vector<double> a, b;
  for (std::uint64_t r = 0; r < 3000; ++r) {
    auto rng = make_engine(6, stream_id("ou-path"), r);
    a.push_back(simulate_ou_path(c, grid, rng).values.back());
    auto rng2 = make_engine(6, stream_id("ou-terminal"), r);
    b.push_back(simulate_ou(c, 1.0, rng2));
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 1e-3);
}

TEST(SimulateOu, RejectsTimesOutsideHorizon) {
  const auto c = build_config(0.1, 1.0, true);
  auto rng = make_engine(1, 1, 1);
  EXPECT_THROW(simulate_ou(c, 1.5, rng), std::domain_error);
  const std::vector<double> bad{0.5, 0.2};
  EXPECT_THROW(simulate_ou_path(c, bad, rng), std::domain_error);
}

TEST(OuMgf, ExactValues) {
  EXPECT_NEAR(ou_mgf_exact(2.0, std::log(2.0)), 2.0, 1e-13);
  for (double q : {0.5, 1.0, 3.0}) EXPECT_NEAR(std::log(ou_mgf_exact(q, 1.3)), integrated_kappa(q, 1.3), 1e-8);
}
