#pragma once

// Goodness-of-fit statistics: Kolmogorov-Smirnov with the asymptotic
// Kolmogorov law, Pearson chi-square, and sample moments.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraglab {

class DegenerateSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TestVerdict {
  std::string name;
  int criterion = 0;  // acceptance criterion number; 0 when not part of the suite
  double statistic = 0.0;
  std::optional<double> p_value;  // statistical tests
  std::optional<bool> exact_pass;  // deterministic checks
  bool pass = false;
  bool reseeded = false;  // passed only on the reseeded rerun
  double runtime = 0.0;  // seconds
  std::string detail;

  bool statistical() const { return p_value.has_value(); }
};

struct MomentReport {
  std::string label;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::optional<double> exact;
  std::optional<double> z;  // (estimate - exact)/stderr, absent when stderr is 0
  std::size_t n = 0;
  std::size_t replicas = 0;
  double t = 0.0;
  double q = 0.0;

  /// |estimate - exact| / exact.
  double rel_error() const {
    if (!exact) throw std::logic_error("MomentReport: no exact value");
    return std::abs(estimate - *exact) / std::abs(*exact);
  }
};

struct SampleMoments {
  double mean = 0.0;
  double stderr_ = 0.0;  // 0 for fewer than two values
};

/// Mean and standard error, summed in index order.
inline SampleMoments sample_moments(std::span<const double> xs) {
  if (xs.empty()) throw DegenerateSample("sample_moments: empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

inline MomentReport make_moment_report(std::string label, std::span<const double> xs, std::optional<double> exact,
                                       std::size_t n, double t, double q) {
  const auto m = sample_moments(xs);
  MomentReport r{std::move(label), m.mean, m.stderr_, exact, std::nullopt, n, xs.size(), t, q};
  if (exact && m.stderr_ > 0.0) r.z = (m.mean - *exact) / m.stderr_;
  return r;
}

/// P(K > lambda) for the Kolmogorov distribution K = sup|B^br|.
inline double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // P(K <= λ) = sqrt(2π)/λ Σ_{k>=1} exp(-(2k-1)² π² / (8λ²)).
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double term = std::exp(c * (2 * k - 1) * (2 * k - 1));
      s += term;
      if (term < 1e-17 * s) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  // 2 Σ_{k>=1} (-1)^{k-1} exp(-2k²λ²).
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 0.0;
  std::size_t size = 0;  // effective sample size
};

/// One-sample KS against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> sample, Cdf cdf) {
  if (sample.empty()) throw DegenerateSample("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    if (!(f >= 0.0 && f <= 1.0)) throw std::domain_error("ks_one_sample: cdf left [0,1]");
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return {d, kolmogorov_survival(std::sqrt(m) * d), sample.size()};
}

/// Two-sample KS; tied values are stepped over together.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DegenerateSample("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.front() == a.back() && b.front() == b.back() && a.front() == b.front())
    throw DegenerateSample("ks_two_sample: both samples are the same constant");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double eff = na * nb / (na + nb);
  return {d, kolmogorov_survival(std::sqrt(eff) * d), static_cast<std::size_t>(eff)};
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 0.0;
};

class InsufficientCounts : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Pearson chi-square of observed counts against cell probabilities. Every
/// expected count must be at least min_expected.
inline ChiSquareResult chi_square(std::span<const std::uint64_t> observed, std::span<const double> probs,
                                  double min_expected = 5.0) {
  if (observed.size() != probs.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square: need matching observed/probability vectors with >= 2 cells");
  std::uint64_t total = 0;
  for (auto o : observed) total += o;
  double stat = 0.0;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    const double e = probs[c] * static_cast<double>(total);
    if (e < min_expected) throw InsufficientCounts("chi_square: expected cell count below 5");
    const double diff = static_cast<double>(observed[c]) - e;
    stat += diff * diff / e;
  }
  const std::size_t dof = observed.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return {stat, dof, boost::math::cdf(boost::math::complement(dist, stat))};
}

}  // namespace fraglab
