#pragma once

// Thin wrappers over Boost.Math adaptive quadrature with a uniform result type.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fraglab {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimate reported by the rule
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod (61 points) on a finite interval.
template <class F>
QuadResult integrate(F f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 15) {
  QuadResult r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, rel_tol, &r.error);
  if (!std::isfinite(r.value)) throw QuadratureError("integrate: non-finite result");
  return r;
}

/// Double-exponential rule on [a, b]; tolerates integrable endpoint singularities.
template <class F>
QuadResult integrate_singular(F f, double a, double b, double rel_tol = 1e-12) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  QuadResult r;
  double l1 = 0.0;
  r.value = rule.integrate(f, a, b, rel_tol, &r.error, &l1);
  if (!std::isfinite(r.value)) throw QuadratureError("integrate_singular: non-finite result");
  return r;
}

/// ∫_a^∞ f for integrands with exponential or fast algebraic decay.
template <class F>
QuadResult integrate_to_infinity(F f, double a, double rel_tol = 1e-12) {
  thread_local boost::math::quadrature::exp_sinh<double> rule;
  QuadResult r;
  double l1 = 0.0;
  r.value = rule.integrate([&](double x) { return f(x + a); }, 0.0, std::numeric_limits<double>::infinity(), rel_tol,
                           &r.error, &l1);
  if (!std::isfinite(r.value)) throw QuadratureError("integrate_to_infinity: non-finite result");
  return r;
}

}  // namespace fraglab
