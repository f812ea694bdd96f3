#pragma once

#include "mopslab/linalg.hpp"
#include "mopslab/moments.hpp"
#include "mopslab/poly.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mopslab {

struct MopIndex {
  long n = 0;
  long m = 0;
  int K = 3;
  RayPairContour contour_n = gamma1_contour();
  RayPairContour contour_m = gamma2_contour();

  long N() const { return n + m; }

  void validate() const {
    if (N() < 1) throw std::invalid_argument("MopIndex: n+m must be >= 1");
    if (n < 0 || m < 0) throw std::invalid_argument("MopIndex: negative degree");
    contour_n.validate();
    contour_m.validate();
    if (contour_n.K != K || contour_m.K != K)
      throw std::invalid_argument("MopIndex: contour K mismatch");
    if ((contour_n.ell == contour_m.ell && contour_n.kappa == contour_m.kappa) ||
        (contour_n.ell == contour_m.kappa && contour_n.kappa == contour_m.ell))
      throw std::invalid_argument("MopIndex: contours must differ as sets");
  }
};

inline MopIndex make_index(long n, long m) { return MopIndex{n, m}; }

struct MopTables {
  MomentTable fn;  // contour_n moments
  MomentTable fm;  // contour_m moments
};

inline MopTables make_tables(const MopIndex& idx, const PrecisionCtx& ctx) {
  long k_max = 2 * idx.N();
  return MopTables{build_moment_table(idx.contour_n, k_max, ctx),
                   build_moment_table(idx.contour_m, k_max, ctx)};
}

// The N×N mixed-moment matrix H_{n,m}: column j < n holds f_n^{(row+j)},
// column n+j holds f_m^{(row+j)}.
inline ComplexMatrix build_mixed_moment_matrix(const MopIndex& idx, const MopTables& t,
                                               const PrecisionCtx& ctx) {
  idx.validate();
  ScopedPrecision scope(ctx);
  long N = idx.N();
  ComplexMatrix H(N, N);
  for (long i = 0; i < N; ++i) {
    for (long j = 0; j < idx.n; ++j) H(i, j) = t.fn.at(i + j);
    for (long j = 0; j < idx.m; ++j) H(i, idx.n + j) = t.fm.at(i + j);
  }
  return H;
}

inline ComplexMatrix build_mixed_moment_matrix(const MopIndex& idx, const PrecisionCtx& ctx) {
  return build_mixed_moment_matrix(idx, make_tables(idx, ctx), ctx);
}

struct MopSolution {
  MopIndex index;
  std::optional<ComplexPoly> P;  // type II, monic of degree N
  std::optional<ComplexPoly> A;  // type I, degree <= n-1 (absent when n = 0)
  std::optional<ComplexPoly> B;  // type I, degree <= m-1 (absent when m = 0)
  bool type_I_exists = false;
  bool type_II_exists = false;
  SolveReport report_I;
  SolveReport report_II;
};

// H·(A;B) = e_{N-1}: homogeneous orthogonality in rows 0..N-2, the
// normalization row is the last one (k = N-1).
inline std::pair<ComplexPoly, ComplexPoly> solve_type_I(const MopIndex& idx, const MopTables& t,
                                                        const PrecisionCtx& ctx,
                                                        SolveReport* report = nullptr) {
  idx.validate();
  ScopedPrecision scope(ctx);
  long N = idx.N();
  ComplexMatrix H = build_mixed_moment_matrix(idx, t, ctx);
  std::vector<Complex> rhs(N);
  rhs[N - 1] = Complex(1);
  std::vector<Complex> x = solve_full_pivot(H, rhs, ctx, report);
  std::vector<Complex> ac(x.begin(), x.begin() + idx.n);
  std::vector<Complex> bc(x.begin() + idx.n, x.end());
  if (ac.empty()) ac.push_back(Complex());
  if (bc.empty()) bc.push_back(Complex());
  return {ComplexPoly(std::move(ac)), ComplexPoly(std::move(bc))};
}

// transpose(H)·p = -(moments of z^N): orthogonality of the monic degree-N
// polynomial, z^N moments moved to the right-hand side.
inline ComplexPoly solve_type_II(const MopIndex& idx, const MopTables& t, const PrecisionCtx& ctx,
                                 SolveReport* report = nullptr) {
  idx.validate();
  ScopedPrecision scope(ctx);
  long N = idx.N();
  ComplexMatrix Ht = build_mixed_moment_matrix(idx, t, ctx).transpose();
  std::vector<Complex> rhs(N);
  for (long r = 0; r < idx.n; ++r) rhs[r] = -t.fn.at(r + N);
  for (long r = 0; r < idx.m; ++r) rhs[idx.n + r] = -t.fm.at(r + N);
  std::vector<Complex> p = solve_full_pivot(Ht, rhs, ctx, report);
  p.push_back(Complex(1));
  return ComplexPoly(std::move(p));
}

inline MopSolution solve_mop(const MopIndex& idx, const PrecisionCtx& ctx) {
  MopSolution sol;
  sol.index = idx;
  MopTables t = make_tables(idx, ctx);
  try {
    auto [A, B] = solve_type_I(idx, t, ctx, &sol.report_I);
    if (idx.n > 0) sol.A = std::move(A);
    if (idx.m > 0) sol.B = std::move(B);
    sol.type_I_exists = true;
  } catch (const SingularMatrixError&) {
    sol.type_I_exists = false;
  }
  try {
    sol.P = solve_type_II(idx, t, ctx, &sol.report_II);
    sol.type_II_exists = true;
  } catch (const SingularMatrixError&) {
    sol.type_II_exists = false;
  }
  return sol;
}

// General-K entry point (K in {5,7} per the figure experiments): identical
// pipeline, only the contours differ.
inline MopSolution solve_general_K(const MopIndex& idx, const PrecisionCtx& ctx) {
  if (idx.K != 5 && idx.K != 7 && idx.K != 3)
    throw std::invalid_argument("solve_general_K: K must be 3, 5 or 7");
  return solve_mop(idx, ctx);
}

enum class MopKind { TypeI, TypeII };

// Re-evaluates the defining moment conditions from the stored tables; this is
// the independent oracle for both solvers. For type I, `poly` is ignored and
// the pair (A,B) is taken from `sol`.
inline Real orthogonality_residual(const MopSolution& sol, MopKind which, const MopTables& t,
                                   const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  const MopIndex& idx = sol.index;
  long N = idx.N();
  Real worst = 0;
  if (which == MopKind::TypeI) {
    if (!sol.type_I_exists) throw std::logic_error("orthogonality_residual: no type I solution");
    for (long k = 0; k < N; ++k) {
      Complex acc;
      if (sol.A)
        for (long j = 0; j <= sol.A->degree(); ++j) acc += (*sol.A)[j] * t.fn.at(k + j);
      if (sol.B)
        for (long j = 0; j <= sol.B->degree(); ++j) acc += (*sol.B)[j] * t.fm.at(k + j);
      if (k == N - 1) acc -= Complex(1);
      worst = (std::max)(worst, abs(acc));
    }
  } else {
    if (!sol.type_II_exists || !sol.P)
      throw std::logic_error("orthogonality_residual: no type II solution");
    const ComplexPoly& P = *sol.P;
    for (long k = 0; k < idx.n; ++k) {
      Complex acc;
      for (long j = 0; j <= P.degree(); ++j) acc += P[j] * t.fn.at(k + j);
      worst = (std::max)(worst, abs(acc));
    }
    for (long k = 0; k < idx.m; ++k) {
      Complex acc;
      for (long j = 0; j <= P.degree(); ++j) acc += P[j] * t.fm.at(k + j);
      worst = (std::max)(worst, abs(acc));
    }
  }
  return worst;
}

// Fixed-weight zeros divided by N^{1/K}: the varying-weight normalization all
// the limit statements use.
inline std::vector<Complex> rescale_zeros(const std::vector<Complex>& zeros, long N, int K) {
  if (N < 1) throw std::invalid_argument("rescale_zeros: N must be >= 1");
  Real scale = pow(Real(N), Real(1) / K);
  std::vector<Complex> out;
  out.reserve(zeros.size());
  for (const auto& z : zeros) out.push_back(z / scale);
  return out;
}

struct CountingMeasure {
  std::vector<Root> atoms;  // rescaled positions with multiplicities
  long normalizer = 1;

  Real total_mass() const {
    long s = 0;
    for (const auto& a : atoms) s += a.multiplicity;
    return Real(s) / normalizer;
  }
};

inline CountingMeasure counting_measure(const ComplexPoly& poly, long N, int K,
                                        const PrecisionCtx& ctx) {
  if (poly.is_zero()) throw std::invalid_argument("counting_measure: zero polynomial");
  CountingMeasure nu;
  nu.normalizer = N;
  if (poly.degree() >= 1) {
    nu.atoms = poly_roots(poly, ctx);
    Real scale = pow(Real(N), Real(1) / K);
    for (auto& a : nu.atoms) a.value = a.value / scale;
  }
  return nu;
}

struct InterlaceReport {
  bool holds = true;
  bool vacuous = false;
  std::vector<Real> violations;  // positions where alternation breaks
};

// Strict alternation of the two sorted real zero lists inside the window.
inline InterlaceReport interlace_check(std::vector<Real> a, std::vector<Real> p, const Real& lo,
                                       const Real& hi) {
  auto prune = [&](std::vector<Real>& v) {
    v.erase(std::remove_if(v.begin(), v.end(), [&](const Real& x) { return x < lo || x > hi; }),
            v.end());
    std::sort(v.begin(), v.end());
  };
  prune(a);
  prune(p);
  InterlaceReport rep;
  if (a.empty() || p.empty()) {
    rep.vacuous = true;
    return rep;
  }
  struct Tagged {
    Real x;
    int tag;
  };
  std::vector<Tagged> merged;
  for (const auto& x : a) merged.push_back({x, 0});
  for (const auto& x : p) merged.push_back({x, 1});
  std::sort(merged.begin(), merged.end(),
            [](const Tagged& u, const Tagged& v) { return u.x < v.x; });
  for (size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].tag == merged[i - 1].tag) {
      rep.holds = false;
      rep.violations.push_back(merged[i].x);
    }
  }
  return rep;
}

}  // namespace mopslab
