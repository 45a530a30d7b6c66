#pragma once

// Gamma-family functions on the positive half-line.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace fraglab {

inline constexpr double euler_gamma = std::numbers::egamma;

namespace detail {

// ln k! for k = 0..20, each factorial exact in 64 bits.
inline const std::array<double, 21>& log_factorials() {
  static const std::array<double, 21> table = [] {
    std::array<double, 21> t{};
    std::uint64_t f = 1;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (k > 0) f *= k;
      t[k] = std::log(static_cast<double>(f));
    }
    return t;
  }();
  return table;
}

// Stirling series for ln Γ(x), x >= 10; the first omitted term is below 1e-17.
inline double log_gamma_stirling(double x) {
  constexpr double half_log_two_pi = 0.91893853320467274178;
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r * (1.0 / 12 + r2 * (-1.0 / 360 + r2 * (1.0 / 1260 + r2 * (-1.0 / 1680 + r2 * (1.0 / 1188 + r2 * (-691.0 / 360360))))));
  return (x - 0.5) * std::log(x) - x + half_log_two_pi + series;
}

}  // namespace detail

/// ln Γ(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("log_gamma: x must be positive and finite");
  if (x <= 21.0 && x == std::floor(x)) return detail::log_factorials()[static_cast<std::size_t>(x) - 1];
  if (x >= 10.0) return detail::log_gamma_stirling(x);
  // Γ(x) = Γ(x+m) / (x (x+1) ... (x+m-1)) with x+m >= 10.
  double shift = 1.0;
  double y = x;
  while (y < 10.0) {
    shift *= y;
    y += 1.0;
  }
  return detail::log_gamma_stirling(y) - std::log(shift);
}

/// ln Γ(x+a) - ln Γ(x) for x > 0, x+a > 0. Once both arguments are at least
/// 10 the Stirling forms are subtracted analytically, so the result keeps full
/// relative precision even when x is huge compared with a.
inline double log_gamma_ratio(double x, double a) {
  if (!(x > 0.0) || !(x + a > 0.0)) throw std::domain_error("log_gamma_ratio: arguments must be positive");
  if (a == 0.0) return 0.0;
  const double y = x + a;
  if (std::min(x, y) < 10.0 || !std::isfinite(y)) return log_gamma(y) - log_gamma(x);
  auto correction = [](double z) {
    const double r = 1.0 / z;
    const double r2 = r * r;
    return r * (1.0 / 12 + r2 * (-1.0 / 360 + r2 * (1.0 / 1260 + r2 * (-1.0 / 1680 + r2 * (1.0 / 1188 + r2 * (-691.0 / 360360))))));
  };
  // (y - 1/2) ln y - (x - 1/2) ln x - a, regrouped around log1p(a/x).
  return (x - 0.5) * std::log1p(a / x) + a * std::log(y) - a + (correction(y) - correction(x));
}

/// Γ(a)/Γ(b), evaluated in log space.
inline double gamma_ratio(double a, double b) { return std::exp(log_gamma(a) - log_gamma(b)); }

/// ψ(x) = d/dx ln Γ(x) for x > 0.
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: x must be positive and finite");
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double r2 = 1.0 / (x * x);
  // Bernoulli terms B_{2k}/(2k x^{2k}), k = 1..7.
  const double tail =
      r2 * (1.0 / 12 - r2 * (1.0 / 120 - r2 * (1.0 / 252 - r2 * (1.0 / 240 - r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 / 12.0))))));
  return acc + std::log(x) - 0.5 / x - tail;
}

/// Beta function B(a, b) for a, b > 0.
inline double beta_fn(double a, double b) { return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b)); }

}  // namespace fraglab
