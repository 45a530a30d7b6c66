#include <gtest/gtest.h>

#include <map>

#include "fraglab/quadrature.hpp"
#include "fraglab/stats.hpp"
#include "fraglab/urn_rates.hpp"

using namespace fraglab;

TEST(RateTable, ThreeVertices) {
  const auto t = rate_table(3);
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.entries[0].pi.to_string(), "{1,3}{2}");
  EXPECT_EQ(t.entries[0].value, Rational(1, 2));
  EXPECT_EQ(t.entries[1].pi.to_string(), "{1}{2,3}");
  EXPECT_EQ(t.entries[1].value, Rational(1, 2));
  EXPECT_EQ(t.entries[2].pi.to_string(), "{1,2}{3}");
  EXPECT_EQ(t.entries[2].value, Rational(1));
  EXPECT_EQ(t.total(), Rational(2));
}

TEST(RateTable, TotalIsNMinusOne) {
  for (std::size_t n = 2; n <= 12; ++n) EXPECT_EQ(rate_table(n).total(), Rational(n - 1)) << n;
  EXPECT_THROW(rate_table(1), std::out_of_range);
  EXPECT_THROW(rate_table(13), std::out_of_range);
}

TEST(RateTable, EachUrnIsAProbability) {
  for (std::size_t n = 2; n <= 10; ++n)
    for (std::size_t k = 2; k <= n; ++k) EXPECT_EQ(pk_total_mass(k, n), Rational(1)) << k << "," << n;
}

TEST(Rate, ZeroBeyondTwoBlocksAndUndefinedOnNeutral) {
  EXPECT_EQ(rate(Partition{{1}, {2}, {3}}), Rational(0));
  EXPECT_THROW(rate(Partition::neutral(3)), std::invalid_argument);
  EXPECT_THROW(pk_prob(Partition{{1, 2}, {4}}), std::invalid_argument);
}

TEST(Rate, ConsistentUnderRestriction) {
  // Summing p_k over the extensions of a binary partition of [n] to [n+1]
  // returns its mass on [n].
  for (std::size_t n = 3; n <= 8; ++n) {
    for (const auto& e : rate_table(n).entries) {
      const auto& red = e.pi.block(2);
      std::vector<Vertex> black(e.pi.block(1).begin(), e.pi.block(1).end());
      std::vector<Vertex> r(red.begin(), red.end());
      auto r_plus = r;
      r_plus.push_back(static_cast<Vertex>(n + 1));
      const auto sum = pk_prob(binary_partition(n + 1, r)) + pk_prob(binary_partition(n + 1, r_plus));
      EXPECT_EQ(sum, e.value);
    }
  }
}

TEST(SamplePk, MatchesExactMassesChiSquare) {
  const std::size_t n = 7;
  const std::size_t k = 3;
  std::map<std::string, std::uint64_t> counts;
  auto rng = make_engine(7, stream_id("urn-chi2"), 0);
  const std::size_t reps = 40000;
  for (std::size_t r = 0; r < reps; ++r) ++counts[sample_pk(k, n, rng).to_partition().to_string()];
  std::vector<std::uint64_t> obs;
  std::vector<double> probs;
  for_each_red_set(k, n, [&](const std::vector<Vertex>& red) {
    const auto pi = binary_partition(n, red);
    obs.push_back(counts[pi.to_string()]);
    probs.push_back(pk_prob(pi).convert_to<double>());
  });
  const auto res = chi_square(obs, probs);
  EXPECT_EQ(res.dof, 15u);
  EXPECT_GT(res.p_value, 1e-3);
}

TEST(SamplePk, RedFractionIsBetaOneKMinusOne) {
  for (std::size_t k : {2u, 4u}) {
    auto rng = make_engine(11, stream_id("urn-beta"), k);
    std::vector<double> fr;
    for (int r = 0; r < 1500; ++r) fr.push_back(sample_pk(k, 20000, rng).red_fraction());
    const double a = static_cast<double>(k - 1);
    const auto ks = ks_one_sample(fr, [a](double x) { return 1.0 - std::pow(1.0 - std::clamp(x, 0.0, 1.0), a); });
    EXPECT_GT(ks.p_value, 1e-3) << "k=" << k;
  }
  auto rng = make_engine(1, 1, 1);
  EXPECT_THROW(sample_pk(1, 5, rng), std::out_of_range);
  EXPECT_THROW(sample_pk(6, 5, rng), std::out_of_range);
}

TEST(LambdaTail, MatchesQuadratureOfDensity) {
  for (double y : {0.01, 0.5, 1.0, 3.0, 10.0}) {
    const double q = integrate_to_infinity([](double u) { return std::exp(-u) / std::pow(-std::expm1(-u), 2); }, y,
                                           1e-12).value;
    EXPECT_NEAR(lambda_tail(y) / q, 1.0, 1e-9) << y;
  }
  EXPECT_DOUBLE_EQ(lambda_tail(std::log(2.0)), 1.0);
  EXPECT_THROW(lambda_tail(0.0), std::domain_error);
}

TEST(FrequencyIntegral, ConvergentAndDivergentCases) {
  EXPECT_NEAR(freq_integral([](double, double x) { return x * x; }), 1.0, 1e-10);
  EXPECT_NEAR(freq_integral([](double, double x) { return x * std::sqrt(x); }), 2.0, 1e-9);
  EXPECT_THROW(freq_integral([](double, double x) { return x; }), DivergentIntegral);
  // Truncated log divergence: ∫_δ^1 x^{-1} dx = -ln δ.
  EXPECT_NEAR(freq_integral_truncated([](double, double x) { return x; }, 1e-6), std::log(1e6), 1e-8);
  EXPECT_THROW(freq_integral_truncated([](double, double x) { return x; }, 0.0), std::domain_error);
}

TEST(GeometricSeries, PartialSumPlusBoundBracketsInverseSquare) {
  for (double x : {0.9, 0.3, 0.05, 0.01}) {
    for (std::size_t K : {5u, 50u, 500u}) {
      const double s = geometric_partial_sum(x, K);
      const double exact = 1.0 / (x * x);
      EXPECT_LE(s, exact * (1 + 1e-12));
      EXPECT_GE(s + geometric_tail_bound(x, K), exact * (1 - 1e-12)) << x << " " << K;
    }
    const auto K = geometric_terms_for(x, 1e-10);
    EXPECT_NEAR(geometric_partial_sum(x, K), 1.0 / (x * x), 1e-10 * 1.01);
  }
}
