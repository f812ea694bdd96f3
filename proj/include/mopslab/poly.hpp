#pragma once

#include "mopslab/complex.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

// Dense complex polynomial, coefficients in increasing degree order.
class ComplexPoly {
 public:
  ComplexPoly() : coeffs_(1) {}
  explicit ComplexPoly(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.resize(1);
    trim();
  }

  static ComplexPoly monomial(int degree, Complex lead = Complex(1)) {
    std::vector<Complex> c(degree + 1);
    c[degree] = std::move(lead);
    return ComplexPoly(std::move(c));
  }

  const std::vector<Complex>& coeffs() const { return coeffs_; }
  Complex& operator[](size_t i) { return coeffs_[i]; }
  const Complex& operator[](size_t i) const { return coeffs_[i]; }
  int degree() const { return int(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == Complex(); }
  bool is_monic() const { return coeffs_.back() == Complex(1); }

  Complex eval(const Complex& z) const {
    Complex acc = coeffs_.back();
    for (size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * z + coeffs_[i];
    return acc;
  }

  ComplexPoly derivative() const {
    if (degree() == 0) return ComplexPoly();
    std::vector<Complex> d(coeffs_.size() - 1);
    for (size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = Real(int(i)) * coeffs_[i];
    return ComplexPoly(std::move(d));
  }

  Real max_coeff_abs() const {
    Real m = 0;
    for (const auto& c : coeffs_) m = (std::max)(m, abs(c));
    return m;
  }

  ComplexPoly& operator+=(const ComplexPoly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    trim();
    return *this;
  }
  ComplexPoly& operator-=(const ComplexPoly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    trim();
    return *this;
  }
  ComplexPoly& operator*=(const Complex& s) {
    for (auto& c : coeffs_) c *= s;
    trim();
    return *this;
  }

  friend ComplexPoly operator+(ComplexPoly a, const ComplexPoly& b) { return a += b; }
  friend ComplexPoly operator-(ComplexPoly a, const ComplexPoly& b) { return a -= b; }
  friend ComplexPoly operator*(ComplexPoly a, const Complex& s) { return a *= s; }

  friend ComplexPoly operator*(const ComplexPoly& a, const ComplexPoly& b) {
    std::vector<Complex> c(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (size_t i = 0; i < a.coeffs_.size(); ++i)
      for (size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return ComplexPoly(std::move(c));
  }

 private:
  void trim() {
    Real floor = max_coeff_abs();
    // Exact trailing-zero trim only; no magnitude-based dropping.
    (void)floor;
    while (coeffs_.size() > 1 && coeffs_.back() == Complex()) coeffs_.pop_back();
  }

  std::vector<Complex> coeffs_;
};

struct Root {
  Complex value;
  int multiplicity = 1;
};

struct RootFindingError : std::runtime_error {
  RootFindingError(const std::string& msg, Complex best, Real residual)
      : std::runtime_error(msg), best_iterate(best), best_residual(residual) {}
  Complex best_iterate;
  Real best_residual;
};

namespace detail {

// Deterministic perturbed roots of unity on the coefficient annulus bound.
inline std::vector<Complex> aberth_initial(const ComplexPoly& p) {
  int d = p.degree();
  Real lead = abs(p[d]);
  Real radius = 0;
  for (int i = 0; i < d; ++i) {
    if (abs(p[i]) == 0) continue;
    Real r = pow(abs(p[i]) / lead, Real(1) / (d - i));
    radius = (std::max)(radius, r);
  }
  radius = 2 * radius + Real(1) / 2;
  std::vector<Complex> z(d);
  Real pi = real_pi();
  for (int k = 0; k < d; ++k) {
    // Fixed irrational-ish phase offset avoids symmetry lock-in; reproducible.
    Real theta = 2 * pi * Real(k) / d + Real(2 * k + 1) / Real(4 * d + 3);
    z[k] = polar(radius * (1 + Real(k % 7) / 100), theta);
  }
  return z;
}

}  // namespace detail

// Aberth-Ehrlich simultaneous iteration with Newton polish.
// Residual contract: |p(root)| <= 10^(-digits/2) * max|coeff| * max(1,|root|)^deg.
inline std::vector<Complex> poly_roots_raw(const ComplexPoly& p, const PrecisionCtx& ctx) {
  if (p.degree() < 1) throw std::invalid_argument("poly_roots: degree must be >= 1");
  ScopedPrecision scope(ctx);
  int d = p.degree();
  ComplexPoly dp = p.derivative();
  std::vector<Complex> z = detail::aberth_initial(p);
  Real tiny = pow(Real(10), -int(ctx.working_digits()) - 10);
  Real target = pow(Real(10), -int(ctx.digits));

  int max_iters = 60 + 4 * int(ctx.digits / 50) + d;
  for (int iter = 0; iter < max_iters; ++iter) {
    Real max_step = 0;
    for (int k = 0; k < d; ++k) {
      Complex pv = p.eval(z[k]);
      if (abs(pv) < tiny) continue;
      Complex dv = dp.eval(z[k]);
      Complex newton = pv / dv;
      Complex sum;
      for (int j = 0; j < d; ++j) {
        if (j == k) continue;
        sum += Complex(Real(1)) / (z[k] - z[j]);
      }
      Complex denom = Complex(Real(1)) - newton * sum;
      Complex step = newton / denom;
      z[k] -= step;
      Real rel = abs(step) / (std::max)(Real(1), abs(z[k]));
      max_step = (std::max)(max_step, rel);
    }
    if (max_step < target) break;
  }

  // Newton polish; multiple roots converge slowly but the cluster midpoint
  // carries the multiplicity downstream.
  for (int k = 0; k < d; ++k) {
    for (int it = 0; it < 8; ++it) {
      Complex pv = p.eval(z[k]);
      Complex dv = dp.eval(z[k]);
      if (abs(dv) == 0) break;
      Complex step = pv / dv;
      z[k] -= step;
      if (abs(step) < tiny * (std::max)(Real(1), abs(z[k]))) break;
    }
  }

  // Residual check.
  Real scale = p.max_coeff_abs();
  Real worst = 0;
  int worst_k = 0;
  for (int k = 0; k < d; ++k) {
    Real bound = ctx.tol_half() * scale * pow((std::max)(Real(1), abs(z[k])), d);
    Real res = abs(p.eval(z[k]));
    if (res / bound > worst) { worst = res / bound; worst_k = k; }
  }
  if (worst > 1)
    throw RootFindingError("poly_roots: residual bound not met", z[worst_k],
                           abs(p.eval(z[worst_k])));
  return z;
}

// Clusters raw roots within 10^(-digits/4); cluster size = multiplicity.
inline std::vector<Root> cluster_roots(std::vector<Complex> z, const PrecisionCtx& ctx,
                                       Real radius = Real(0)) {
  if (radius == 0) radius = ctx.tol_quarter();
  std::vector<Root> out;
  std::vector<bool> used(z.size(), false);
  for (size_t i = 0; i < z.size(); ++i) {
    if (used[i]) continue;
    std::vector<size_t> cluster{i};
    used[i] = true;
    // Grow transitively so a split double root clusters as one.
    for (size_t c = 0; c < cluster.size(); ++c) {
      for (size_t j = 0; j < z.size(); ++j) {
        if (used[j]) continue;
        if (abs(z[cluster[c]] - z[j]) < radius) {
          used[j] = true;
          cluster.push_back(j);
        }
      }
    }
    Complex centroid;
    for (size_t idx : cluster) centroid += z[idx];
    centroid = centroid / Real(int(cluster.size()));
    out.push_back(Root{centroid, int(cluster.size())});
  }
  return out;
}

inline std::vector<Root> poly_roots(const ComplexPoly& p, const PrecisionCtx& ctx) {
  return cluster_roots(poly_roots_raw(p, ctx), ctx);
}

}  // namespace mopslab
