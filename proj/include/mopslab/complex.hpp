#pragma once

#include "mopslab/precision.hpp"

#include <ostream>
#include <utility>

namespace mopslab {

// Complex number over the multiprecision Real. std::complex is not specified
// for user-defined scalar types, so we carry our own minimal layer.
struct Complex {
  Real re{0};
  Real im{0};

  Complex() = default;
  Complex(Real r) : re(std::move(r)) {}
  Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
  Complex(int r) : re(r) {}
  Complex(double r) : re(r) {}
  Complex(double r, double i) : re(r), im(i) {}

  Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
  Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
  Complex& operator*=(const Complex& o) {
    Real r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  Complex& operator/=(const Complex& o) {
    Real d = o.re * o.re + o.im * o.im;
    Real r = (re * o.re + im * o.im) / d;
    im = (im * o.re - re * o.im) / d;
    re = std::move(r);
    return *this;
  }
  Complex operator-() const { return Complex(-re, -im); }
};

inline Complex operator+(Complex a, const Complex& b) { return a += b; }
inline Complex operator-(Complex a, const Complex& b) { return a -= b; }
inline Complex operator*(Complex a, const Complex& b) { return a *= b; }
inline Complex operator/(Complex a, const Complex& b) { return a /= b; }
inline Complex operator*(const Real& s, Complex a) { a.re *= s; a.im *= s; return a; }
inline Complex operator*(Complex a, const Real& s) { a.re *= s; a.im *= s; return a; }
inline Complex operator/(Complex a, const Real& s) { a.re /= s; a.im /= s; return a; }
inline bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const Complex& a, const Complex& b) { return !(a == b); }

inline Complex conj(const Complex& z) { return Complex(z.re, -z.im); }
inline Real norm_sq(const Complex& z) { return z.re * z.re + z.im * z.im; }
inline Real abs(const Complex& z) { return hypot(z.re, z.im); }
inline Real arg(const Complex& z) { return atan2(z.im, z.re); }

inline Complex complex_i() { return Complex(Real(0), Real(1)); }

inline Complex polar(const Real& r, const Real& theta) {
  return Complex(r * cos(theta), r * sin(theta));
}

inline Complex exp(const Complex& z) {
  Real e = exp(z.re);
  return Complex(e * cos(z.im), e * sin(z.im));
}

// Principal branch, cut along the negative real axis.
inline Complex log(const Complex& z) {
  return Complex(log(abs(z)), arg(z));
}

// Principal square root.
inline Complex sqrt(const Complex& z) {
  Real r = abs(z);
  if (r == 0) return Complex();
  Real t = sqrt((r + abs(z.re)) / 2);
  if (z.re >= 0) {
    return Complex(t, z.im / (2 * t));
  }
  Real s = z.im >= 0 ? Real(1) : Real(-1);
  return Complex(abs(z.im) / (2 * t), s * t);
}

// Principal cube root (arg in (-pi/3, pi/3]).
inline Complex cbrt(const Complex& z) {
  Real r = abs(z);
  if (r == 0) return Complex();
  return polar(cbrt(r), arg(z) / 3);
}

inline Complex pow_int(Complex z, long n) {
  if (n < 0) return Complex(Real(1)) / pow_int(z, -n);
  Complex acc(Real(1));
  while (n > 0) {
    if (n & 1) acc *= z;
    z *= z;
    n >>= 1;
  }
  return acc;
}

inline std::ostream& operator<<(std::ostream& os, const Complex& z) {
  return os << "(" << z.re << (z.im < 0 ? "" : "+") << z.im << "i)";
}

inline double to_double(const Real& x) { return x.convert_to<double>(); }
inline std::pair<double, double> to_double(const Complex& z) {
  return {to_double(z.re), to_double(z.im)};
}

}  // namespace mopslab
