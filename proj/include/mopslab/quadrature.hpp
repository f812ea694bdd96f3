#pragma once

#include "mopslab/complex.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mopslab {

struct GLRule {
  std::vector<Real> nodes;    // on (-1, 1)
  std::vector<Real> weights;
};

namespace detail {

// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<Real, Real> legendre_pd(int n, const Real& x) {
  Real p0 = 1, p1 = x;
  for (int k = 2; k <= n; ++k) {
    Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  Real d = n * (x * p1 - p0) / (x * x - 1);
  return {p1, d};
}

}  // namespace detail

// Gauss-Legendre nodes/weights at the current working precision, cached per
// (n, mpfr precision bits).
inline const GLRule& gl_rule(int n, const PrecisionCtx& ctx) {
  static std::map<std::pair<int, unsigned>, GLRule> cache;
  static std::mutex mu;
  ScopedPrecision scope(ctx);
  unsigned bits = Real::default_precision();
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({n, bits});
  if (it != cache.end()) return it->second;

  GLRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  Real pi = real_pi();
  Real tol = ctx.eps() * 16;
  int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton.
    Real x = cos(pi * (Real(i) + Real(3) / 4) / (Real(n) + Real(1) / 2));
    for (int it2 = 0; it2 < 200; ++it2) {
      auto [p, d] = detail::legendre_pd(n, x);
      Real dx = p / d;
      x -= dx;
      if (abs(dx) < tol) break;
    }
    auto [p, d] = detail::legendre_pd(n, x);
    (void)p;
    Real w = 2 / ((1 - x * x) * d * d);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return cache.emplace(std::make_pair(n, bits), std::move(rule)).first->second;
}

inline int gl_order_for(const PrecisionCtx& ctx) {
  return (std::max)(48, int(ctx.digits) / 3 + 8);
}

// Fixed-order GL over [a,b] split into `panels` equal panels; f: Real -> Complex.
template <typename F>
Complex integrate_panels(F&& f, const Real& a, const Real& b, int panels, const GLRule& rule) {
  Complex total;
  Real h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    Real lo = a + p * h;
    Real mid = lo + h / 2, rad = h / 2;
    Complex acc;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * f(mid + rad * rule.nodes[i]);
    total += acc * rad;
  }
  return total;
}

struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& msg, Complex best, Real err)
      : std::runtime_error(msg), best_value(best), last_change(err) {}
  Complex best_value;
  Real last_change;
};

// Panel-doubling GL: doubles the panel count until successive values agree to
// tol (relative to max(1,|I|)).
template <typename F>
Complex integrate_adaptive(F&& f, const Real& a, const Real& b, const PrecisionCtx& ctx,
                           Real tol = Real(0), int max_doublings = 14) {
  ScopedPrecision scope(ctx);
  if (tol == 0) tol = ctx.tol_half();
  const GLRule& rule = gl_rule(gl_order_for(ctx), ctx);
  Complex prev = integrate_panels(f, a, b, 1, rule);
  for (int k = 1; k <= max_doublings; ++k) {
    Complex cur = integrate_panels(f, a, b, 1 << k, rule);
    Real change = abs(cur - prev);
    if (change <= tol * (std::max)(Real(1), abs(cur))) return cur;
    prev = cur;
  }
  throw QuadratureError("integrate_adaptive: panel doubling did not converge", prev, abs(prev));
}

// Complex line segment za -> zb; f: Complex -> Complex; returns ∫ f dz.
template <typename F>
Complex integrate_segment(F&& f, const Complex& za, const Complex& zb, const PrecisionCtx& ctx,
                          Real tol = Real(0)) {
  Complex dir = zb - za;
  return integrate_adaptive(
             [&](const Real& t) { return f(za + dir * t); }, Real(0), Real(1), ctx, tol) *
         dir;
}

// ∫_a^b f(x) dx where f ~ C/sqrt(x-a) near a (or b): substitute x = a + s^2.
template <typename F>
Complex integrate_sqrt_endpoint(F&& f, const Real& a, const Real& b, bool singular_at_a,
                                const PrecisionCtx& ctx, Real tol = Real(0)) {
  ScopedPrecision scope(ctx);
  Real len = b - a;
  Real smax = sqrt(len);
  if (singular_at_a) {
    return integrate_adaptive(
        [&](const Real& s) { return f(a + s * s) * (2 * s); }, Real(0), smax, ctx, tol);
  }
  return integrate_adaptive(
      [&](const Real& s) { return f(b - s * s) * (2 * s); }, Real(0), smax, ctx, tol);
}

// Both endpoints sqrt-singular: split at the midpoint.
template <typename F>
Complex integrate_sqrt_both(F&& f, const Real& a, const Real& b, const PrecisionCtx& ctx,
                            Real tol = Real(0)) {
  Real mid = (a + b) / 2;
  return integrate_sqrt_endpoint(f, a, mid, true, ctx, tol) +
         integrate_sqrt_endpoint(f, mid, b, false, ctx, tol);
}

// ∮ f dz over the circle |z - center| = radius, counterclockwise.
template <typename F>
Complex integrate_circle(F&& f, const Complex& center, const Real& radius,
                         const PrecisionCtx& ctx, Real tol = Real(0)) {
  ScopedPrecision scope(ctx);
  Real two_pi = 2 * real_pi();
  Complex i1 = complex_i();
  return integrate_adaptive(
      [&](const Real& t) {
        Complex z = center + polar(radius, t);
        return f(z) * (i1 * (z - center));
      },
      Real(0), two_pi, ctx, tol);
}

}  // namespace mopslab
