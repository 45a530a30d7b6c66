#pragma once

// Closed-form laws of the cluster weights: Mittag-Leffler moments and density,
// subtree-weight moments, the total q-moment, the laws μ_{j,t} and θ_{j,k},
// the joint Mellin transform of (X_1,...,X_{j+1}), the cumulant κ and the
// small- and large-time limits.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraglab/quadrature.hpp"
#include "fraglab/special.hpp"
#include "fraglab/urn_rates.hpp"

namespace fraglab {

/// e^{-t}, the percolation parameter at time t.
inline double keep_probability(double t) { return std::exp(-t); }

inline void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw std::domain_error(std::string(what) + " must be nonnegative");
}

// ---------------------------------------------------------------------------
// Root weight.

/// E[X_1(t)^q] = Γ(q+1)/Γ(e^{-t}q+1).
inline double mellin_X1(double q, double t) {
  require_nonnegative(q, "mellin_X1: q");
  require_nonnegative(t, "mellin_X1: t");
  return std::exp(log_gamma(q + 1.0) - log_gamma(keep_probability(t) * q + 1.0));
}

class SeriesNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeriesValue {
  double value = 0.0;
  std::size_t terms = 0;
  double largest_term = 0.0;  // size of the biggest summand, a cancellation gauge
};

inline constexpr std::size_t ml_series_cap = 500;

/// Density of X_1(t), the Mittag-Leffler law with parameter p = e^{-t}:
/// (e^t/π) Σ_{k>=1} (-1)^{k+1} Γ(kp+1)/k! x^{k-1} sin(πkp).
/// Stops once the unsigned summand magnitude drops below 1e-14 of the partial
/// sum. Throws SeriesNotConverged at 500 terms, and also when cancellation
/// among the summands leaves a rounding error above 1e-10 of the value (large x).
inline SeriesValue ml_density_series(double x, double t) {
  if (!(x > 0.0)) throw std::domain_error("ml_density: x must be positive");
  if (!(t > 0.0)) throw std::domain_error("ml_density: t must be positive");
  const long double p = std::exp(-static_cast<long double>(t));
  const long double lx = std::log(static_cast<long double>(x));
  const long double scale = std::exp(static_cast<long double>(t)) / std::numbers::pi_v<long double>;
  long double sum = 0.0L;
  long double largest = 0.0L;
  for (std::size_t k = 1; k <= ml_series_cap; ++k) {
    const long double kk = static_cast<long double>(k);
    const long double log_mag = std::lgamma(kk * p + 1.0L) - std::lgamma(kk + 1.0L) + (kk - 1.0L) * lx;
    const long double mag = std::exp(log_mag);
    const long double sign = (k % 2 == 1) ? 1.0L : -1.0L;
    sum += sign * mag * std::sin(std::numbers::pi_v<long double> * kk * p);
    largest = std::max(largest, mag);
    if (k > 1 && mag < 1e-14L * std::abs(sum)) {
      const long double rounding = scale * largest * kk * std::numeric_limits<long double>::epsilon();
      if (!(rounding <= 1e-10L * std::abs(scale * sum)))
        throw SeriesNotConverged("ml_density: cancellation exceeds 1e-10 relative at this x");
      return {static_cast<double>(scale * sum), k, static_cast<double>(scale * largest)};
    }
  }
  throw SeriesNotConverged("ml_density: series did not converge within 500 terms");
}

/// Series density, with round-off negatives of size <= 1e-10 clipped to 0.
inline double ml_density(double x, double t) {
  const double v = ml_density_series(x, t).value;
  if (v < 0.0 && v >= -1e-10) return 0.0;
  return v;
}

/// Density of X_1(t) through X_1 = S^{-p}, S positive p-stable with Laplace
/// transform e^{-λ^p}, and Kanter's integral for the stable density:
///   f_S(s) = p/(1-p) s^{-1/(1-p)} (1/π) ∫_0^π A(φ) exp(-A(φ) s^{-p/(1-p)}) dφ,
///   A(φ) = sin(pφ)^{p/(1-p)} sin((1-p)φ) / sin(φ)^{1/(1-p)}.
/// Stable for every x > 0.
inline double ml_density_integral(double x, double t) {
  if (!(x > 0.0)) throw std::domain_error("ml_density: x must be positive");
  if (!(t > 0.0)) throw std::domain_error("ml_density: t must be positive");
  const double p = keep_probability(t);
  const double lx = std::log(x);
  const double c = std::exp(lx / (1.0 - p));  // s^{-p/(1-p)} with s = x^{-1/p}
  auto g = [p, c](double phi) {
    const double a = std::pow(std::sin(p * phi), p / (1.0 - p)) * std::sin((1.0 - p) * phi) /
                     std::pow(std::sin(phi), 1.0 / (1.0 - p));
    const double e = a * c;
    return e < 700.0 ? a * std::exp(-e) : 0.0;
  };
  const double integral = integrate(g, 0.0, std::numbers::pi, 1e-13).value;
  // f_X(x) = f_S(x^{-1/p}) · x^{-1/p-1}/p.
  const double log_fs_prefactor = std::log(p / (1.0 - p) / std::numbers::pi) + lx / (p * (1.0 - p));
  return std::exp(log_fs_prefactor - (1.0 / p + 1.0) * lx) / p * integral;
}

/// Largest x on the grid 0.05·m for which ml_density_series is still free of
/// cancellation; the series and the integral form are interchangeable below it.
inline double ml_series_limit(double t) {
  double x = 0.05;
  for (;;) {
    try {
      (void)ml_density_series(x + 0.05, t);
    } catch (const SeriesNotConverged&) {
      return x;
    }
    x += 0.05;
    if (x > 1e3) return x;
  }
}

/// Series density below ml_series_limit(t), the integral form above it.
/// The switch point is fixed so the function is piecewise smooth.
inline double ml_density_robust(double x, double t, double limit) {
  return x <= limit ? ml_density(x, t) : ml_density_integral(x, t);
}

inline double ml_density_robust(double x, double t) { return ml_density_robust(x, t, ml_series_limit(t)); }

namespace detail {

// ∫_a^b of ml_density_robust, splitting at the switch point.
inline double ml_mass(double a, double b, double t, double limit) {
  auto piece = [t, limit](double lo, double hi) {
    if (hi <= lo) return 0.0;
    return integrate([t, limit](double y) { return y > 0.0 ? ml_density_robust(y, t, limit) : 0.0; }, lo, hi, 1e-8, 10)
        .value;
  };
  if (a < limit && limit < b) return piece(a, limit) + piece(limit, b);
  return piece(a, b);
}

}  // namespace detail

/// P(X_1(t) <= x) by adaptive quadrature of the density.
inline double ml_cdf(double x, double t) {
  if (!(x > 0.0)) return 0.0;
  const double limit = ml_series_limit(t);
  double total = 0.0;
  for (double lo = 0.0; lo < x; lo += 1.0) total += detail::ml_mass(lo, std::min(x, lo + 1.0), t, limit);
  return std::min(1.0, total);
}

/// P(X_1(t) <= x) from the term-by-term integrated series
/// (e^t/π) Σ (-1)^{k+1} Γ(kp+1)/(k·k!) x^k sin(πkp); valid while the series
/// is free of cancellation (moderate x).
inline double ml_cdf_series(double x, double t) {
  if (!(x > 0.0)) return 0.0;
  const long double p = std::exp(-static_cast<long double>(t));
  const long double lx = std::log(static_cast<long double>(x));
  const long double scale = std::exp(static_cast<long double>(t)) / std::numbers::pi_v<long double>;
  long double sum = 0.0L;
  long double largest = 0.0L;
  for (std::size_t k = 1; k <= ml_series_cap; ++k) {
    const long double kk = static_cast<long double>(k);
    const long double mag = std::exp(std::lgamma(kk * p + 1.0L) - std::lgamma(kk + 1.0L) - std::log(kk) + kk * lx);
    sum += ((k % 2 == 1) ? 1.0L : -1.0L) * mag * std::sin(std::numbers::pi_v<long double> * kk * p);
    largest = std::max(largest, mag);
    if (k > 1 && mag < 1e-15L * std::abs(sum)) {
      if (!(scale * largest * kk * std::numeric_limits<long double>::epsilon() <= 1e-10L * std::abs(scale * sum)))
        throw SeriesNotConverged("ml_cdf_series: cancellation exceeds 1e-10 relative at this x");
      return static_cast<double>(scale * sum);
    }
  }
  throw SeriesNotConverged("ml_cdf_series: series did not converge within 500 terms");
}

/// Tabulated CDF for repeated evaluation: nodes on [0, upper] hold the
/// cumulative mass; a query integrates from the nearest node below. Beyond
/// upper the value is the captured mass.
class MittagLefflerCdf {
 public:
  MittagLefflerCdf(double t, double upper, std::size_t nodes = 200)
      : t_(t), upper_(upper), step_(upper / static_cast<double>(nodes)), limit_(t > 0.0 ? ml_series_limit(t) : 0.0) {
    if (!(t > 0.0) || !(upper > 0.0) || nodes == 0) throw std::invalid_argument("MittagLefflerCdf: bad grid");
    cum_.assign(nodes + 1, 0.0);
    for (std::size_t i = 1; i <= nodes; ++i)
      cum_[i] = cum_[i - 1] + detail::ml_mass(step_ * static_cast<double>(i - 1), step_ * static_cast<double>(i), t_, limit_);
  }

  double operator()(double x) const {
    if (!(x > 0.0)) return 0.0;
    if (x >= upper_) return std::min(1.0, cum_.back());
    const auto i = std::min(cum_.size() - 1, static_cast<std::size_t>(x / step_));
    return std::min(1.0, cum_[i] + detail::ml_mass(step_ * static_cast<double>(i), x, t_, limit_));
  }

  /// Mass captured on [0, upper].
  double mass() const { return cum_.back(); }

 private:
  double t_;
  double upper_;
  double step_;
  double limit_;
  std::vector<double> cum_;
};

/// min over q of E[X_1(t)^q]/x^q, a bound on P(X_1(t) >= x).
inline double ml_tail_bound(double x, double t) {
  double best = 1.0;
  for (double q = 1.0; q <= 200.0; q += 1.0) best = std::min(best, std::exp(std::log(mellin_X1(q, t)) - q * std::log(x)));
  return best;
}

// ---------------------------------------------------------------------------
// Subtree weights and the total q-moment.

/// E[ρ_i(t)^q] = Γ(q+1)Γ(i)/Γ(e^{-t}q+i), for real i >= 1.
inline double rho_moment(double q, double t, double i) {
  require_nonnegative(q, "rho_moment: q");
  require_nonnegative(t, "rho_moment: t");
  if (!(i >= 1.0)) throw std::domain_error("rho_moment: i must be at least 1");
  return std::exp(log_gamma(q + 1.0) - log_gamma_ratio(i, keep_probability(t) * q));
}

/// E[Σ_i X_i(t)^q] = (q-1)/(e^{-t}q-1) · Γ(q)/Γ(e^{-t}q), finite iff q > e^t.
inline double total_q_moment(double q, double t) {
  require_nonnegative(t, "total_q_moment: t");
  const double p = keep_probability(t);
  if (!(p * q > 1.0)) throw std::domain_error("total_q_moment: requires q > e^t");
  return (q - 1.0) / (p * q - 1.0) * std::exp(log_gamma(q) - log_gamma(p * q));
}

struct SeriesWithTail {
  double value = 0.0;
  double explicit_part = 0.0;
  double tail = 0.0;             // integral-plus-correction estimate of the omitted terms
  double remainder_bound = 0.0;  // size of the first neglected correction term
  std::size_t terms = 0;
};

/// E[X_1^q] + (1-e^{-t}) Σ_{i>=2} E[ρ_i^q]: terms i = 2..N-1 are summed, and
/// Σ_{i>=N} f(i) is replaced by ∫_N^∞ f + f(N)/2 - f'(N)/12, with f the
/// real-argument subtree moment and f' = f·(ψ(x) - ψ(x+pq)).
inline SeriesWithTail total_q_moment_series(double q, double t, std::size_t N = 2000) {
  require_nonnegative(t, "total_q_moment: t");
  const double p = keep_probability(t);
  const double a = p * q;
  if (!(a > 1.0)) throw std::domain_error("total_q_moment: requires q > e^t");
  if (N < 3) throw std::invalid_argument("total_q_moment_series: N must be at least 3");
  auto f = [&](double x) { return rho_moment(q, t, x); };
  double s = 0.0;
  for (std::size_t i = N - 1; i >= 2; --i) s += f(static_cast<double>(i));
  const double xn = static_cast<double>(N);
  const double fn = f(xn);
  const double dfn = fn * (digamma(xn) - digamma(xn + a));
  const double integral = integrate_to_infinity(f, xn, 1e-14).value;
  const double tail = integral + 0.5 * fn - dfn / 12.0;
  // Next Euler-Maclaurin term f'''(N)/720 with f ~ C x^{-a}.
  const double third = fn * a * (a + 1.0) * (a + 2.0) / (xn * xn * xn);
  SeriesWithTail r;
  r.explicit_part = mellin_X1(q, t) + (1.0 - p) * s;
  r.tail = (1.0 - p) * tail;
  r.value = r.explicit_part + r.tail;
  r.remainder_bound = (1.0 - p) * third / 720.0;
  r.terms = N - 2;
  return r;
}

// ---------------------------------------------------------------------------
// μ_{j,t}: law of min Π_{j+1}(t).

/// C(k-2, k-j-1) e^{-t(k-j-1)} (1-e^{-t})^j for k >= j+1.
inline double mu_jt(std::size_t j, double t, std::size_t k) {
  if (j < 1) throw std::domain_error("mu_jt: j must be positive");
  if (!(t > 0.0)) throw std::domain_error("mu_jt: t must be positive");
  if (k <= j) throw std::domain_error("mu_jt: requires k >= j+1");
  const double p = keep_probability(t);
  const double kk = static_cast<double>(k);
  const double jj = static_cast<double>(j);
  const double log_binom = log_gamma(kk - 1.0) - log_gamma(kk - jj) - log_gamma(jj);
  return std::exp(log_binom + (kk - jj - 1.0) * std::log(p) + jj * std::log1p(-p));
}

/// Σ_{k>K} μ_{j,t}(k) bounded by the ratio test.
inline double mu_tail_bound(std::size_t j, double t, std::size_t K) {
  if (K < j + 1) return 1.0;
  const double p = keep_probability(t);
  const double k1 = static_cast<double>(K + 1);
  const double ratio = p * (k1 - 1.0) / (k1 - static_cast<double>(j));
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return mu_jt(j, t, K + 1) / (1.0 - ratio);
}

// ---------------------------------------------------------------------------
// θ_{j,k}: ordered subtree sizes after removing j-1 uniform edges of a
// random recursive tree on [k].

struct ThetaQuery {
  std::vector<std::size_t> ks;  // (k_1,...,k_j), all >= 1

  std::size_t j() const { return ks.size(); }
  std::size_t k() const { return std::accumulate(ks.begin(), ks.end(), std::size_t{0}); }

  void validate() const {
    if (ks.empty()) throw std::invalid_argument("theta: empty composition");
    for (auto v : ks)
      if (v < 1) throw std::invalid_argument("theta: parts must be positive");
  }
};

inline BigInt binomial(long n, long r) {
  if (r < 0 || n < 0 || r > n) return 0;
  BigInt b = 1;
  for (long i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

inline BigInt factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

/// θ_{2,k}(k_1,k_2) = k/(k_2(k_2+1)(k-1)).
inline Rational theta_meir_moon(std::size_t k, std::size_t k1, std::size_t k2) {
  if (k < 2 || k1 < 1 || k2 < 1 || k1 + k2 != k) throw std::invalid_argument("theta_meir_moon: invalid composition");
  return Rational(BigInt(k), BigInt(k2) * (k2 + 1) * (k - 1));
}

/// θ_{j,k}(k_1..k_j) for every j >= 1 as
///   (j-1)! Π_m (k_m-1)! / ((k-1)! (k-1)(k-2)...(k-j+1))
///   · Σ_{1 < v_2 < ... < v_j <= k} Π_{m=2}^{j} (v_m - 1) C(k - v_m - Σ_{i>m} k_i, k_m - 1),
/// where v_m is the root label of the m-th subtree.
inline Rational theta_general(const ThetaQuery& query) {
  query.validate();
  const auto& ks = query.ks;
  const std::size_t j = query.j();
  const std::size_t k = query.k();
  if (j == 1) return 1;
  BigInt num = factorial(j - 1);
  for (auto v : ks) num *= factorial(v - 1);
  BigInt den = factorial(k - 1);
  for (std::size_t m = 1; m < j; ++m) den *= (k - m);

  // suffix[m] = Σ_{i>m} k_i, 1-based.
  std::vector<long> suffix(j + 1, 0);
  for (std::size_t m = j; m >= 1; --m) suffix[m - 1] = suffix[m] + static_cast<long>(ks[m - 1]);
  // level[v] = Σ over v_m = v < v_{m+1} < ... < v_j of Π_{i>=m} weights,
  // built from m = j down to 2; beyond(v) = Σ_{w>v} of the previous level.
  const long kl = static_cast<long>(k);
  std::vector<BigInt> level(k + 2, 0);
  std::vector<BigInt> beyond(k + 2, 1);
  for (std::size_t m = j; m >= 2; --m) {
    std::vector<BigInt> cur(k + 2, 0);
    for (long v = 2; v <= kl; ++v) {
      const BigInt c = binomial(kl - v - suffix[m], static_cast<long>(ks[m - 1]) - 1);
      if (c != 0) cur[v] = BigInt(v - 1) * c * beyond[v];
    }
    level = std::move(cur);
    beyond.assign(k + 2, 0);
    for (long v = kl - 1; v >= 0; --v) beyond[v] = beyond[v + 1] + level[v + 1];
  }
  return Rational(num * beyond[1], den);
}

/// The nested sum as printed alongside the Meir-Moon formula:
///   Π(k_i-1)!/((k-1)!(k-1)...(k-j+1)) Σ_{l_j=j-1}^{k-k_j} C(k-l_j, k_j)
///   Σ_{l_{j-1}=j-2}^{(k-k_j-k_{j-1}) ∧ (l_j-1)} C(k-k_j-l_{j-1}, k_{j-1}) ... .
/// It disagrees with enumeration (e.g. it gives 1/4 for θ_{3,3}(1,1,1) = 1);
/// kept so the discrepancy stays measurable.
inline Rational theta_printed_formula(const ThetaQuery& query) {
  query.validate();
  const auto& ks = query.ks;
  const std::size_t j = query.j();
  const long k = static_cast<long>(query.k());
  if (j < 3) throw std::invalid_argument("theta_printed_formula: stated for j >= 3");
  BigInt num = 1;
  for (auto v : ks) num *= factorial(v - 1);
  BigInt den = factorial(static_cast<std::size_t>(k) - 1);
  for (long m = 1; m < static_cast<long>(j); ++m) den *= (k - m);

  // rec(m, upper): Σ over l_m from m-1 to upper of C(k - Σ_{i>m} k_i - l_m, k_m) · rec(m-1, l_m - 1).
  auto suffix = [&](std::size_t m) {
    long s = 0;
    for (std::size_t i = m + 1; i <= j; ++i) s += static_cast<long>(ks[i - 1]);
    return s;
  };
  std::function<BigInt(std::size_t, long)> rec = [&](std::size_t m, long upper) -> BigInt {
    if (m == 1) return 1;
    const long hi = std::min(k - suffix(m) - static_cast<long>(ks[m - 1]), upper);
    BigInt s = 0;
    for (long l = static_cast<long>(m) - 1; l <= hi; ++l)
      s += binomial(k - suffix(m) - l, static_cast<long>(ks[m - 1])) * rec(m - 1, l - 1);
    return s;
  };
  return Rational(num * rec(j, k), den);
}

inline constexpr std::size_t theta_bruteforce_max_k = 9;

/// θ_{j,k} for every composition, by enumerating all (k-1)! recursive trees on
/// [k] and all (j-1)-subsets of their edges.
inline std::map<std::vector<std::size_t>, Rational> theta_bruteforce_table(std::size_t j, std::size_t k) {
  if (j < 1 || k < j) throw std::invalid_argument("theta_bruteforce: need 1 <= j <= k");
  if (k > theta_bruteforce_max_k) throw std::out_of_range("theta_bruteforce: k must be at most 9");
  std::map<std::vector<std::size_t>, std::uint64_t> counts;
  std::uint64_t cases = 0;
  std::vector<std::size_t> parent(k + 1, 0);
  for (std::size_t i = 2; i <= k; ++i) parent[i] = 1;
  std::vector<std::size_t> root(k + 1), cut;
  std::vector<std::uint8_t> is_cut(k + 1);
  std::vector<std::size_t> sizes(k + 1);
  while (true) {
    // Every (j-1)-subset of edges {e_2..e_k}, as an increasing index vector.
    cut.resize(j - 1);
    for (std::size_t c = 0; c + 1 < j; ++c) cut[c] = c + 2;
    while (true) {
      std::fill(is_cut.begin(), is_cut.end(), 0);
      for (auto e : cut) is_cut[e] = 1;
      std::fill(sizes.begin(), sizes.end(), 0);
      for (std::size_t v = 1; v <= k; ++v) {
        root[v] = (v == 1 || is_cut[v]) ? v : root[parent[v]];
        ++sizes[root[v]];
      }
      std::vector<std::size_t> comp;
      for (std::size_t v = 1; v <= k; ++v)
        if (sizes[v] > 0) comp.push_back(sizes[v]);
      ++counts[comp];
      ++cases;
      // Next subset.
      std::size_t c = j - 1;
      while (c > 0 && cut[c - 1] == k - (j - 1 - c)) --c;
      if (c == 0) break;
      ++cut[c - 1];
      for (std::size_t d = c; d < j - 1; ++d) cut[d] = cut[d - 1] + 1;
    }
    // Next tree: mixed radix over parent[i] in [1, i-1].
    std::size_t i = k;
    while (i >= 2 && parent[i] == i - 1) {
      parent[i] = 1;
      --i;
    }
    if (i < 2) break;
    ++parent[i];
  }
  std::map<std::vector<std::size_t>, Rational> out;
  for (const auto& [comp, c] : counts) out[comp] = Rational(c, cases);
  return out;
}

inline Rational theta_bruteforce(const ThetaQuery& query) {
  query.validate();
  const auto table = theta_bruteforce_table(query.j(), query.k());
  const auto it = table.find(query.ks);
  return it == table.end() ? Rational(0) : it->second;
}

/// Calls visit(ks) for each composition of k into j positive parts, in
/// lexicographic order.
template <class Visit>
void for_each_composition(std::size_t k, std::size_t j, Visit visit) {
  if (j == 0 || k < j) return;
  std::vector<std::size_t> ks(j);
  auto place = [&](auto&& self, std::size_t i, std::size_t remaining) -> void {
    if (i + 1 == j) {
      ks[i] = remaining;
      visit(static_cast<const std::vector<std::size_t>&>(ks));
      return;
    }
    for (std::size_t v = 1; v + (j - i - 1) <= remaining; ++v) {
      ks[i] = v;
      self(self, i + 1, remaining - v);
    }
  };
  place(place, 0, k);
}

/// E[X_k(t)^q] = Σ_{m>=k} μ_{k-1,t}(m) E[ρ_m(t)^q]: block k is the subtree
/// cluster of its least element. Summed until the μ tail bound times the
/// (decreasing) subtree moment is below 1e-14 of the total.
inline double block_moment(std::size_t k, double q, double t) {
  if (k < 1) throw std::domain_error("block_moment: k must be positive");
  if (k == 1) return mellin_X1(q, t);
  double sum = 0.0;
  for (std::size_t m = k;; ++m) {
    const double rho = rho_moment(q, t, static_cast<double>(m));
    sum += mu_jt(k - 1, t, m) * rho;
    if (mu_tail_bound(k - 1, t, m) * rho <= 1e-14 * sum) return sum;
    if (m > 100000000) throw SeriesNotConverged("block_moment: no convergence");
  }
}

// ---------------------------------------------------------------------------
// Joint Mellin transform of (X_1(t), ..., X_{j+1}(t)).

struct JointMellinQuery {
  std::size_t j = 1;
  double t = 1.0;
  std::vector<double> qs;  // q_1..q_{j+1}
  std::size_t K = 400;

  void validate() const {
    if (j < 1) throw std::invalid_argument("joint_mellin: j must be positive");
    if (!(t > 0.0)) throw std::domain_error("joint_mellin: t must be positive");
    if (qs.size() != j + 1) throw std::invalid_argument("joint_mellin: need j+1 exponents");
    for (double q : qs) require_nonnegative(q, "joint_mellin: exponent");
    if (K < j + 1) throw std::invalid_argument("joint_mellin: K must be at least j+1");
  }
};

struct JointMellin {
  double value = 0.0;
  double tail_bound = 0.0;  // bound on the omitted terms k > K
  std::size_t terms = 0;
};

namespace detail {

/// θ_{j,k} as a double for the compositions needed by the joint transform.
inline double theta_value(const std::vector<std::size_t>& ks) {
  const std::size_t j = ks.size();
  const std::size_t k = std::accumulate(ks.begin(), ks.end(), std::size_t{0});
  if (j == 1) return 1.0;
  if (j == 2) return theta_meir_moon(k, ks[0], ks[1]).convert_to<double>();
  return theta_general(ThetaQuery{ks}).convert_to<double>();
}

}  // namespace detail

/// Σ_{k=j+1}^{K} μ_{j,t}(k) Σ_{k_1+..+k_j=k-1} θ_{j,k-1}(k_1..k_j)
///   · Γ(k)/Γ(qe^{-t}+k) · Π_{i=1}^{j+1} Γ(q_i+k_i)/Γ(k_i), with k_{j+1} = 1.
/// The tail bound uses Γ(k)/Γ(k+a) <= 1 and Γ(x+q)/Γ(x) <= (x+q)^q, so each
/// omitted inner sum is at most (k+q)^q.
inline JointMellin joint_mellin(const JointMellinQuery& query) {
  query.validate();
  const std::size_t j = query.j;
  const double t = query.t;
  const double p = keep_probability(t);
  const double q = std::accumulate(query.qs.begin(), query.qs.end(), 0.0);
  const double last = log_gamma(query.qs[j] + 1.0);
  JointMellin out;
  for (std::size_t k = j + 1; k <= query.K; ++k) {
    const double kk = static_cast<double>(k);
    const double common = last - log_gamma_ratio(kk, q * p);
    double inner = 0.0;
    for_each_composition(k - 1, j, [&](const std::vector<std::size_t>& ks) {
      double lg = common;
      for (std::size_t i = 0; i < j; ++i) {
        const double ki = static_cast<double>(ks[i]);
        lg += log_gamma_ratio(ki, query.qs[i]);
      }
      inner += detail::theta_value(ks) * std::exp(lg);
    });
    out.value += mu_jt(j, t, k) * inner;
    ++out.terms;
  }
  // Σ_{k>K} μ(k) (k+q)^q by the ratio test.
  const double k1 = static_cast<double>(query.K + 1);
  const double first = mu_jt(j, t, query.K + 1) * std::pow(k1 + q, q);
  const double ratio = p * (k1 - 1.0) / (k1 - static_cast<double>(j)) * std::pow((k1 + 1.0 + q) / (k1 + q), q);
  out.tail_bound = ratio < 1.0 ? first / (1.0 - ratio) : std::numeric_limits<double>::infinity();
  return out;
}

/// Raises K geometrically from the query's value until the tail bound is at
/// most tol; throws when K would exceed max_K.
inline JointMellin joint_mellin_to(JointMellinQuery query, double tol, std::size_t max_K = 2000000) {
  while (true) {
    query.validate();
    auto r = joint_mellin(query);
    if (r.tail_bound <= tol) return r;
    if (query.K >= max_K) throw SeriesNotConverged("joint_mellin: requested accuracy unreachable at the cap");
    query.K = std::min(max_K, query.K * 2);
  }
}

/// The j = 1 transform written out:
/// (1-e^{-t}) Γ(q_2+1) Σ_{k>=2} (k-1) e^{-t(k-2)} Γ(q_1+k-1)/Γ((q_1+q_2)e^{-t}+k).
inline double joint_mellin_j1_explicit(double q1, double q2, double t, std::size_t K) {
  require_nonnegative(q1, "joint_mellin: q1");
  require_nonnegative(q2, "joint_mellin: q2");
  if (!(t > 0.0)) throw std::domain_error("joint_mellin: t must be positive");
  const double p = keep_probability(t);
  const double lp = std::log(p);
  double s = 0.0;
  for (std::size_t k = 2; k <= K; ++k) {
    const double kk = static_cast<double>(k);
    s += std::exp(std::log(kk - 1.0) + (kk - 2.0) * lp + log_gamma(q1 + kk - 1.0) - log_gamma((q1 + q2) * p + kk));
  }
  return (1.0 - p) * std::exp(log_gamma(q2 + 1.0)) * s;
}

// ---------------------------------------------------------------------------
// Cumulant of the driving Lévy process.

/// κ(q) = q ψ(q+1).
inline double kappa(double q) {
  require_nonnegative(q, "kappa: q");
  return q == 0.0 ? 0.0 : q * digamma(q + 1.0);
}

/// (e^{qx} - 1 - qx) e^x / (1 - e^x)^2 for x < 0, cancellation-free near 0.
inline double levy_khintchine_integrand(double q, double x) {
  const double qx = q * x;
  double num;
  if (std::abs(qx) < 1e-3) {
    num = qx * qx * (0.5 + qx * (1.0 / 6 + qx * (1.0 / 24 + qx / 120)));
  } else {
    num = std::expm1(qx) - qx;
  }
  const double d = std::expm1(x);
  return num * std::exp(x) / (d * d);
}

/// -γq + ∫_{-40}^0 (e^{qx}-1-qx) Λ(dx), on breakpoints -40, -5, -1, -0.1, 0.
inline double kappa_levy_khintchine(double q) {
  require_nonnegative(q, "kappa_levy_khintchine: q");
  if (q == 0.0) return 0.0;
  auto g = [q](double x) { return x < 0.0 ? levy_khintchine_integrand(q, x) : 0.5 * q * q; };
  const double cuts[] = {-40.0, -5.0, -1.0, -0.1, 0.0};
  double s = 0.0;
  for (int i = 0; i + 1 < 5; ++i) s += integrate(g, cuts[i], cuts[i + 1], 1e-13).value;
  return -euler_gamma * q + s;
}

/// ∫_0^t κ(e^{-s} q) ds, which equals ln E[X_1(t)^q].
inline double integrated_kappa(double q, double t) {
  require_nonnegative(q, "integrated_kappa: q");
  require_nonnegative(t, "integrated_kappa: t");
  if (t == 0.0 || q == 0.0) return 0.0;
  return integrate([q](double s) { return kappa(std::exp(-s) * q); }, 0.0, t, 1e-14).value;
}

// ---------------------------------------------------------------------------
// Limits.

/// lim_{t→0+} E[X_1^{q_1} X_2^{q_2}]/t = B(q_1+1, q_2-1).
inline double limit_joint_t0(double q1, double q2) {
  require_nonnegative(q1, "limit_joint_t0: q1");
  if (!(q2 > 1.0)) throw std::domain_error("limit_joint_t0: requires q2 > 1");
  return beta_fn(q1 + 1.0, q2 - 1.0);
}

/// lim_n E[(n^{e^{-t}} X_n(t))^q] = (1-e^{-t})^{e^{-t}q} Γ(q+1).
inline double c3_limit_moment(double q, double t) {
  require_nonnegative(q, "c3_limit_moment: q");
  if (!(t > 0.0)) throw std::domain_error("c3_limit_moment: t must be positive");
  const double p = keep_probability(t);
  return std::exp(p * q * std::log1p(-p) + log_gamma(q + 1.0));
}

/// n^{e^{-t}q} E[ρ_i(t)^q] at i = n/(1-e^{-t}), the finite-n counterpart of
/// c3_limit_moment.
inline double c3_finite_moment(double q, double t, double n) {
  const double p = keep_probability(t);
  return std::exp(p * q * std::log(n)) * rho_moment(q, t, n / (1.0 - p));
}

}  // namespace fraglab
