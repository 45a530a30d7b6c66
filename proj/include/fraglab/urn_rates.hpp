#pragma once

// Splitting rates of the restricted chains: the measures p_k built from a
// Pólya urn, their exact values on binary partitions of [n], the jump-size
// tail of the root weight, and the frequency integral against x^{-2} dx.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraglab/partition.hpp"
#include "fraglab/quadrature.hpp"
#include "fraglab/rng.hpp"

namespace fraglab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// A p_k partition restricted to [n]: the red labels form the second block.
struct UrnPartition {
  std::size_t n = 0;
  std::vector<Vertex> red;  // increasing, red.front() == k

  Vertex k() const { return red.front(); }

  /// Red fraction among the labels k..n.
  double red_fraction() const { return static_cast<double>(red.size()) / static_cast<double>(n - k() + 1); }

  Partition to_partition() const {
    std::vector<Vertex> black;
    for (Vertex v = 1; v <= n; ++v)
      if (!std::binary_search(red.begin(), red.end(), v)) black.push_back(v);
    return Partition({Block(std::move(black)), Block(red)});
  }
};

/// Urn with k-1 black balls (labels 1..k-1) and one red ball labelled k; ball
/// m+1 copies the colour of a uniform pick among the m balls present.
inline UrnPartition sample_pk(std::size_t k, std::size_t n, Engine& rng) {
  if (k < 2 || k > n) throw std::out_of_range("sample_pk: need 2 <= k <= n");
  UrnPartition u{n, {static_cast<Vertex>(k)}};
  for (std::size_t m = k; m < n; ++m) {
    if (uniform_int(rng, 1, static_cast<std::uint32_t>(m)) <= u.red.size()) u.red.push_back(static_cast<Vertex>(m + 1));
  }
  return u;
}

inline void require_binary(const Partition& pi, const char* who) {
  if (pi.block_count() != 2 || !pi.is_of_range()) throw std::invalid_argument(std::string(who) + ": need a binary partition of [n]");
}

/// p_k(π) for a binary partition π of [n], with k = min π_2.
inline Rational pk_prob(const Partition& pi) {
  require_binary(pi, "pk_prob");
  const Block& red_block = pi.block(2);
  const std::size_t n = pi.ground_size();
  const std::size_t k = red_block.min();
  Rational p = 1;
  std::size_t red = 1;
  std::size_t black = k - 1;
  for (std::size_t m = k; m < n; ++m) {
    if (red_block.contains(static_cast<Vertex>(m + 1))) {
      p *= Rational(red, m);
      ++red;
    } else {
      p *= Rational(black, m);
      ++black;
    }
  }
  return p;
}

/// Jump rate r_π of the restricted chain from 1_[n] to π.
inline Rational rate(const Partition& pi) {
  if (pi.block_count() < 2) throw std::invalid_argument("rate: the neutral partition has no rate");
  if (pi.block_count() > 2) return 0;
  return pk_prob(pi);
}

struct RateEntry {
  Partition pi;
  Rational value;
};

struct RateTable {
  std::size_t n = 0;
  std::vector<RateEntry> entries;  // ordered by (k, subset of {k+1..n} as a bitmask)

  Rational total() const {
    Rational s = 0;
    for (const auto& e : entries) s += e.value;
    return s;
  }
};

inline constexpr std::size_t rate_table_max_n = 12;

/// Visits the binary partitions of [n] with min π_2 = k, as the red set.
template <class Visit>
void for_each_red_set(std::size_t k, std::size_t n, Visit visit) {
  const std::size_t free = n - k;
  std::vector<Vertex> red;
  for (std::uint32_t mask = 0; mask < (1u << free); ++mask) {
    red.assign(1, static_cast<Vertex>(k));
    for (std::size_t b = 0; b < free; ++b)
      if (mask & (1u << b)) red.push_back(static_cast<Vertex>(k + 1 + b));
    visit(red);
  }
}

inline Partition binary_partition(std::size_t n, const std::vector<Vertex>& red) {
  return UrnPartition{n, red}.to_partition();
}

inline RateTable rate_table(std::size_t n) {
  if (n < 2 || n > rate_table_max_n) throw std::out_of_range("rate_table: need 2 <= n <= 12");
  RateTable table{n, {}};
  for (std::size_t k = 2; k <= n; ++k) {
    for_each_red_set(k, n, [&](const std::vector<Vertex>& red) {
      auto pi = binary_partition(n, red);
      auto r = pk_prob(pi);
      table.entries.push_back({std::move(pi), std::move(r)});
    });
  }
  return table;
}

/// Σ p_k(π) over binary π of [n] with min π_2 = k; equals 1.
inline Rational pk_total_mass(std::size_t k, std::size_t n) {
  if (k < 2 || k > n || n > rate_table_max_n) throw std::out_of_range("pk_total_mass: need 2 <= k <= n <= 12");
  Rational s = 0;
  for_each_red_set(k, n, [&](const std::vector<Vertex>& red) { s += pk_prob(binary_partition(n, red)); });
  return s;
}

namespace detail {

inline nlohmann::json integer_json(const BigInt& v) {
  if (v <= std::numeric_limits<std::int64_t>::max() && v >= std::numeric_limits<std::int64_t>::min())
    return v.convert_to<std::int64_t>();
  return v.str();
}

}  // namespace detail

inline nlohmann::json to_json(const RateTable& t) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : t.entries) {
    const auto& red = e.pi.block(2);
    entries.push_back({{"pi2", std::vector<Vertex>(red.begin(), red.end())},
                       {"num", detail::integer_json(numerator(e.value))},
                       {"den", detail::integer_json(denominator(e.value))}});
  }
  const Rational total = t.total();
  return {{"n", t.n},
          {"entries", std::move(entries)},
          {"total_num", detail::integer_json(numerator(total))},
          {"total_den", detail::integer_json(denominator(total))}};
}

/// Λ((-∞, -y]) for Λ(dx) = e^x (1-e^x)^{-2} dx on (-∞, 0).
inline double lambda_tail(double y) {
  if (!(y > 0.0)) throw std::domain_error("lambda_tail: y must be positive");
  return 1.0 / std::expm1(y);
}

class DivergentIntegral : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// ∫_δ^1 f(1-x, x) x^{-2} dx on decades [10^{-m-1}, 10^{-m}] (the last one
/// clipped at δ), each by adaptive quadrature.
template <class F>
double freq_integral_truncated(F f, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("freq_integral: truncation must lie in (0,1)");
  auto g = [&](double x) { return f(1.0 - x, x) / (x * x); };
  double total = 0.0;
  for (double hi = 1.0; hi > delta; hi /= 10.0) total += integrate(g, std::max(hi / 10.0, delta), hi, 1e-12).value;
  return total;
}

/// ∫_0^1 f(1-x, x) x^{-2} dx. Decades are added until three consecutive ones
/// contribute less than tol relative to the running total; if that has not
/// happened by 10^{-300}, or eight consecutive decades fail to shrink by at
/// least 1%, the integral is reported divergent.
template <class F>
double freq_integral(F f, double tol = 1e-12) {
  auto g = [&](double x) { return f(1.0 - x, x) / (x * x); };
  double total = 0.0;
  int quiet = 0;
  double prev_piece = std::numeric_limits<double>::infinity();
  int growing = 0;
  for (int m = 0; m < 300; ++m) {
    const double hi = std::pow(10.0, -m);
    const double piece = integrate(g, hi / 10.0, hi, 1e-12).value;
    total += piece;
    const double mag = std::abs(piece);
    quiet = mag <= tol * std::max(std::abs(total), 1e-300) ? quiet + 1 : 0;
    if (quiet >= 3) return total;
    growing = (m > 0 && mag >= 0.99 * prev_piece) ? growing + 1 : 0;
    if (growing >= 8) throw DivergentIntegral("freq_integral: integrand is not integrable against x^-2 dx near 0");
    prev_piece = mag;
  }
  throw DivergentIntegral("freq_integral: no convergence by 1e-300");
}

/// Σ_{k=2}^{K} (k-1)(1-x)^{k-2}.
inline double geometric_partial_sum(double x, std::size_t K) {
  if (!(x > 0.0 && x <= 1.0)) throw std::domain_error("geometric_partial_sum: x must lie in (0,1]");
  const double r = 1.0 - x;
  double s = 0.0;
  double pw = 1.0;
  for (std::size_t k = 2; k <= K; ++k) {
    s += static_cast<double>(k - 1) * pw;
    pw *= r;
  }
  return s;
}

/// Upper bound on Σ_{k>K} (k-1)(1-x)^{k-2} from the ratio test: the first
/// omitted term over 1 - (largest ratio of consecutive omitted terms).
inline double geometric_tail_bound(double x, std::size_t K) {
  if (!(x > 0.0 && x <= 1.0)) throw std::domain_error("geometric_tail_bound: x must lie in (0,1]");
  const double r = 1.0 - x;
  const double kk = static_cast<double>(K);
  const double ratio = r * (kk + 1.0) / kk;
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return kk * std::pow(r, kk - 1.0) / (1.0 - ratio);
}

/// Smallest K with geometric_tail_bound(x, K) <= tol.
inline std::size_t geometric_terms_for(double x, double tol) {
  std::size_t K = 2;
  while (geometric_tail_bound(x, K) > tol) {
    if (K > 100000000) throw std::runtime_error("geometric_terms_for: tolerance unreachable");
    K = K < 64 ? K + 1 : K + K / 8;
  }
  return K;
}

}  // namespace fraglab
