#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <stdexcept>
#include <string>

namespace mopslab {

// Arbitrary-precision real, decimal digits set at runtime.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

// Working precision for a computation. `digits` is the precision results are
// quoted at; `guard_digits` extra digits absorb roundoff inside kernels.
struct PrecisionCtx {
  unsigned digits = 400;
  unsigned guard_digits = 20;

  PrecisionCtx() = default;
  PrecisionCtx(unsigned d, unsigned g = 20) : digits(d), guard_digits(g) {
    if (digits < 50) throw std::invalid_argument("PrecisionCtx: digits must be >= 50");
    if (guard_digits < 10) throw std::invalid_argument("PrecisionCtx: guard_digits must be >= 10");
  }

  unsigned working_digits() const { return digits + guard_digits; }

  Real eps() const { return pow(Real(10), -int(digits)); }
  // Tolerance scales used throughout the operation contracts.
  Real tol_half() const { return pow(Real(10), -int(digits / 2)); }
  Real tol_quarter() const { return pow(Real(10), -int(digits / 4)); }
  Real tol_eighth() const { return pow(Real(10), -int(digits / 8)); }
};

// Sets the thread's default mpfr precision for the lifetime of the object.
class ScopedPrecision {
 public:
  explicit ScopedPrecision(const PrecisionCtx& ctx)
      : saved_(Real::default_precision()) {
    Real::default_precision(ctx.working_digits());
  }
  explicit ScopedPrecision(unsigned digits10) : saved_(Real::default_precision()) {
    Real::default_precision(digits10);
  }
  ~ScopedPrecision() { Real::default_precision(saved_); }
  ScopedPrecision(const ScopedPrecision&) = delete;
  ScopedPrecision& operator=(const ScopedPrecision&) = delete;

 private:
  unsigned saved_;
};

inline Real real_pi() {
  Real p;
  mpfr_const_pi(p.backend().data(), MPFR_RNDN);
  return p;
}

inline std::string to_decimal_string(const Real& x, unsigned digits) {
  return x.str(digits, std::ios_base::scientific);
}

}  // namespace mopslab
