#pragma once

#include "mopslab/precision.hpp"

#include <stdexcept>

namespace mopslab {

// Gamma at a positive rational p/q. Only small denominators are needed
// (the moment formulas use q = K <= 64). Backed by mpfr_gamma, computed
// with extra guard digits so the quoted result meets the ctx error bound.
inline Real gamma_rational(long p, long q, const PrecisionCtx& ctx) {
  if (q == 0) throw std::domain_error("gamma_rational: zero denominator");
  if (q < 0) { p = -p; q = -q; }
  if (p <= 0) throw std::domain_error("gamma_rational: argument must be positive");
  if (q > 64) throw std::domain_error("gamma_rational: denominator too large");
  ScopedPrecision scope(ctx.working_digits() + 10);
  Real x = Real(p) / Real(q);
  return tgamma(x);
}

inline Real gamma_rational(long p, long q) { return gamma_rational(p, q, PrecisionCtx(50, 10)); }

}  // namespace mopslab
