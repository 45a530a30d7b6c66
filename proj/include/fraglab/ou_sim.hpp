#pragma once

// The spectrally negative Lévy process L with Lévy measure
// Λ(dx) = e^x (1-e^x)^{-2} dx on (-∞, 0) and cumulant κ(q) = qψ(q+1), and the
// OU-type process U(t) = L(t) - ∫_0^t U(s) ds driven by it.
//
// Jumps of magnitude at least δ form a compound Poisson process; the smaller
// ones are either compensated away or replaced by a Brownian surrogate with
// matched variance.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fraglab/exact_dist.hpp"
#include "fraglab/quadrature.hpp"
#include "fraglab/rng.hpp"
#include "fraglab/special.hpp"

namespace fraglab {

struct LevyConfig {
  double delta = 0.0;
  double horizon = 0.0;
  bool gaussian_correction = true;
  double jump_rate = 0.0;    // Λ((-∞, -δ]) = 1/(e^δ - 1)
  double drift = 0.0;        // -γ + ∫_{-∞}^{-δ} (-x) Λ(dx)
  double sigma_delta = 0.0;  // (∫_{-δ}^0 x² Λ(dx))^{1/2}
};

namespace detail {

// y e^{-y} / (1-e^{-y})^2, the density of -x under Λ.
inline double levy_density_abs(double y) {
  const double d = -std::expm1(-y);
  return std::exp(-y) / (d * d);
}

}  // namespace detail

/// ∫_δ^∞ y Λ(-dy), by quadrature.
inline double large_jump_compensator(double delta) {
  return integrate_to_infinity([](double y) { return y * detail::levy_density_abs(y); }, delta, 1e-13).value;
}

/// ∫_0^δ y² Λ(-dy), by quadrature; y² times the density tends to 1 at 0.
inline double small_jump_variance(double delta) {
  auto g = [](double y) {
    if (y == 0.0) return 1.0;
    const double r = y / std::expm1(y);
    return r * r * std::exp(y);
  };
  return integrate(g, 0.0, delta, 1e-13).value;
}

inline LevyConfig build_config(double delta, double horizon, bool gaussian_correction) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("build_config: delta must lie in (0, 1]");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::domain_error("build_config: horizon must be positive");
  LevyConfig c;
  c.delta = delta;
  c.horizon = horizon;
  c.gaussian_correction = gaussian_correction;
  c.jump_rate = 1.0 / std::expm1(delta);
  c.drift = -euler_gamma + large_jump_compensator(delta);
  c.sigma_delta = std::sqrt(small_jump_variance(delta));
  return c;
}

/// Cumulant of the truncated process: b q + (σ_δ² q²/2 if enabled) +
/// ∫_{-∞}^{-δ} (e^{qx} - 1) Λ(dx).
inline double truncated_kappa(const LevyConfig& cfg, double q) {
  const double jumps = integrate_to_infinity(
      [q](double y) { return std::expm1(-q * y) * detail::levy_density_abs(y); }, cfg.delta, 1e-13).value;
  const double gauss = cfg.gaussian_correction ? 0.5 * cfg.sigma_delta * cfg.sigma_delta * q * q : 0.0;
  return cfg.drift * q + gauss + jumps;
}

/// Magnitude y >= δ of a large jump by inversion of
/// P(Y >= y) = (e^δ - 1)/(e^y - 1).
inline double sample_jump_magnitude(const LevyConfig& cfg, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("sample_jump_magnitude: u must lie in (0, 1)");
  return std::log1p(std::expm1(cfg.delta) / u);
}

/// U(t) from U(0) = 0. Between jumps the drift relaxes exactly and the
/// Gaussian part is OU-filtered, so U(t) = b(1-e^{-t}) + G - Σ y_i e^{-(t-τ_i)}
/// with G ~ N(0, σ_δ²(1-e^{-2t})/2) and (τ_i, -y_i) the large jumps.
inline double simulate_ou(const LevyConfig& cfg, double t, Engine& rng) {
  if (!(t >= 0.0) || t > cfg.horizon) throw std::domain_error("simulate_ou: t must lie in [0, horizon]");
  double jumps = 0.0;
  for (double tau = exponential(rng) / cfg.jump_rate; tau <= t; tau += exponential(rng) / cfg.jump_rate)
    jumps += sample_jump_magnitude(cfg, uniform_open(rng)) * std::exp(tau - t);
  double u = cfg.drift * -std::expm1(-t) - jumps;
  if (cfg.gaussian_correction) u += cfg.sigma_delta * std::sqrt(-0.5 * std::expm1(-2.0 * t)) * standard_normal(rng);
  return u;
}

struct OUPath {
  std::vector<double> times;   // increasing; jump epochs and grid points
  std::vector<double> values;  // U just after each time
  std::vector<double> jumps;   // signed jump sizes of L, in epoch order
};

/// Path of U observed at the jump epochs and at every point of grid, advanced
/// segment by segment with the exact relaxation
/// U ← U e^{-h} + b(1-e^{-h}) + σ_δ sqrt((1-e^{-2h})/2) Z.
inline OUPath simulate_ou_path(const LevyConfig& cfg, std::span<const double> grid, Engine& rng) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || grid[i] > cfg.horizon || (i > 0 && grid[i] < grid[i - 1]))
      throw std::domain_error("simulate_ou_path: grid must be sorted within [0, horizon]");
  }
  OUPath path;
  double now = 0.0;
  double u = 0.0;
  auto relax = [&](double to) {
    const double h = to - now;
    if (h > 0.0) {
      u = u * std::exp(-h) - cfg.drift * std::expm1(-h);
      if (cfg.gaussian_correction) u += cfg.sigma_delta * std::sqrt(-0.5 * std::expm1(-2.0 * h)) * standard_normal(rng);
    }
    now = to;
  };
  std::size_t g = 0;
  double next_jump = exponential(rng) / cfg.jump_rate;
  while (g < grid.size()) {
    if (next_jump <= grid[g]) {
      relax(next_jump);
      const double y = sample_jump_magnitude(cfg, uniform_open(rng));
      u -= y;
      path.times.push_back(now);
      path.values.push_back(u);
      path.jumps.push_back(-y);
      next_jump += exponential(rng) / cfg.jump_rate;
    } else {
      relax(grid[g]);
      path.times.push_back(now);
      path.values.push_back(u);
      ++g;
    }
  }
  return path;
}

/// E[e^{qU(t)}] = Γ(q+1)/Γ(e^{-t}q+1).
inline double ou_mgf_exact(double q, double t) { return mellin_X1(q, t); }

}  // namespace fraglab
