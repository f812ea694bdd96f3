#pragma once

#include "mopslab/arc.hpp"
#include "mopslab/poly.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

// c = −(243/64·(1−4α(1−α))²)^{1/3}, real cube root, c ≤ 0.
inline Real c_of_alpha(const Real& alpha, const PrecisionCtx& ctx) {
  if (!(alpha > 0) || alpha > Real(1) / 2)
    throw std::invalid_argument("c_of_alpha: alpha must be in (0, 1/2]");
  ScopedPrecision scope(ctx);
  Real tau = alpha * (1 - alpha);
  Real t = 1 - 4 * tau;  // = (1-2α)² ≥ 0
  return -cbrt(Real(243) / 64 * t * t);
}

enum class Regime { Subcritical, Intermediate, Supercritical };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Intermediate: return "intermediate";
    case Regime::Supercritical: return "supercritical";
  }
  return "?";
}

struct TransitionConstants {
  Real tau0 = Real(1) / 12;  // node collides with b1 (analytic)
  Real tau1;                 // sheet-1 critical trajectory hits a1
  Real tau_c;                // a_* collides with a1 (= alpha_c(1-alpha_c))
  Real tau2;                 // a_* collides with the sheet-1 trajectory
  Real alpha_c;
  Real alpha_2;
};

inline Real alpha_of_tau(const Real& tau) { return (1 - sqrt(1 - 4 * tau)) / 2; }

// Reference values frozen from this library's own bisection of the trajectory
// event probes (find_transition_taus); tau_c was cross-checked against an
// independent quadrature of the saddle-connection integral
// Re \int_{a2}^{a1} (xi_1 - xi_3) dz = 0 and the two agree to ~4e-9.
inline TransitionConstants pinned_transitions() {
  TransitionConstants t;
  t.alpha_c = Real("0.2576173387");
  t.alpha_2 = Real("0.3546877338");
  t.tau_c = Real("0.1912506455");
  t.tau2 = t.alpha_2 * (1 - t.alpha_2);
  t.tau1 = Real("0.1249794418");
  return t;
}

struct XiTriple {
  Complex z;
  Complex xi1, xi2, xi3;

  const Complex& operator[](int i) const { return i == 0 ? xi1 : (i == 1 ? xi2 : xi3); }
  Complex& operator[](int i) { return i == 0 ? xi1 : (i == 1 ? xi2 : xi3); }
  std::array<Complex, 3> as_array() const { return {xi1, xi2, xi3}; }
};

struct SpectralCurveData {
  Real alpha;
  Real tau;
  Real c;
  ComplexPoly R;     // 3z⁴ − 3z − c
  ComplexPoly D;     // −2z⁶ + 3z³ + cz² − 3τ
  ComplexPoly disc;  // 4R³ − 27D², reduced closed form (degree 6)
  Real a1, b1;       // real branch points, a1 < b1
  Complex a2, b2;    // b2 = conj(a2), Im a2 < 0
  Real b_star;       // real node
  Real rho;          // radius bound: all finite structure inside |z| < rho
  Regime regime = Regime::Subcritical;

  // Attached by the geometry module once Δ₂ is traced; enables path planning
  // through the pocket between Δ₂ and the real axis.
  std::shared_ptr<const ArcPolyline> delta2;
  std::optional<Real> a_star;

  Complex R_at(const Complex& z) const { return R.eval(z); }
  Complex D_at(const Complex& z) const { return D.eval(z); }
};

namespace detail {

// Roots of ξ³ + pξ + q by Cardano with a Newton polish.
inline std::array<Complex, 3> depressed_cubic_roots(const Complex& p, const Complex& q,
                                                    const PrecisionCtx& ctx) {
  std::array<Complex, 3> roots;
  if (abs(p) == 0 && abs(q) == 0) {
    roots.fill(Complex());
    return roots;
  }
  Complex half_q = q / Real(2);
  Complex disc = half_q * half_q + pow_int(p / Real(3), 3);
  Complex s = sqrt(disc);
  // pick the sign avoiding cancellation
  Complex u3 = (abs(-half_q + s) > abs(-half_q - s)) ? (-half_q + s) : (-half_q - s);
  Complex u = cbrt(u3);
  Complex v = (abs(u) == 0) ? Complex() : -p / (Real(3) * u);
  Real pi = real_pi();
  Complex w = polar(Real(1), 2 * pi / 3);  // primitive cube root of unity
  Complex w2 = conj(w);
  roots[0] = u + v;
  roots[1] = w * u + w2 * v;
  roots[2] = w2 * u + w * v;
  // Newton polish on f = ξ³ + pξ + q
  for (auto& r : roots) {
    for (int it = 0; it < 6; ++it) {
      Complex f = pow_int(r, 3) + p * r + q;
      Complex df = Real(3) * r * r + p;
      if (abs(df) == 0) break;
      Complex step = f / df;
      r -= step;
      if (abs(step) <= ctx.eps() * (1 + abs(r))) break;
    }
  }
  return roots;
}

}  // namespace detail

// The three branch values at z as an unlabeled set.
inline std::array<Complex, 3> xi_values_unlabeled(const SpectralCurveData& curve,
                                                  const Complex& z, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  return detail::depressed_cubic_roots(-curve.R_at(z), curve.D_at(z), ctx);
}

struct LabelingError : std::runtime_error {
  LabelingError(const std::string& msg, Complex where) : std::runtime_error(msg), position(where) {}
  Complex position;
};

namespace detail {

// Match the 3 new root values to predicted positions; returns the permutation
// and the ratio (second-best cost)/(best cost) as an ambiguity guard.
inline std::array<int, 3> match_roots(const std::array<Complex, 3>& pred,
                                      const std::array<Complex, 3>& vals, Real& quality) {
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  Real best = -1, second = -1;
  int best_i = 0;
  for (int i = 0; i < 6; ++i) {
    Real cost = 0;
    for (int j = 0; j < 3; ++j) cost += abs(pred[j] - vals[perms[i][j]]);
    if (best < 0 || cost < best) {
      second = best;
      best = cost;
      best_i = i;
    } else if (second < 0 || cost < second) {
      second = cost;
    }
  }
  quality = (best == 0) ? Real(1e30) : second / best;
  return {perms[best_i][0], perms[best_i][1], perms[best_i][2]};
}

}  // namespace detail

// Analytic continuation of a labeled triple along the straight segment from
// seed.z to z1. Step control: prediction by linear extrapolation, matching by
// minimum total displacement over all 6 permutations; the step halves when
// the best/second-best cost ratio is not decisive.
inline XiTriple continue_xi(const SpectralCurveData& curve, const XiTriple& seed,
                            const Complex& z1, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  XiTriple cur = seed;
  XiTriple prev = seed;  // previous accepted point, for extrapolation
  Real t = 0;            // position along [seed.z, z1]
  Real h = Real(1) / 8;
  Complex dirv = z1 - seed.z;
  if (abs(dirv) == 0) return cur;
  int halvings = 0;
  while (t < 1) {
    Real step = (std::min)(h, 1 - t);
    Real tn = t + step;
    Complex zn = seed.z + dirv * tn;
    auto vals = xi_values_unlabeled(curve, zn, ctx);
    // predict by linear extrapolation of each labeled branch
    std::array<Complex, 3> pred{cur.xi1, cur.xi2, cur.xi3};
    if (prev.z != cur.z) {
      Real dt_prev = abs(cur.z - prev.z);
      Real dt_new = abs(zn - cur.z);
      Real lam = dt_new / dt_prev;
      for (int j = 0; j < 3; ++j) pred[j] = cur[j] + (cur[j] - prev[j]) * lam;
    }
    Real quality;
    auto perm = detail::match_roots(pred, vals, quality);
    if (quality < 4) {
      h /= 2;
      if (++halvings > 200 || h < pow(Real(10), -int(ctx.digits)))
        throw LabelingError("continue_xi: ambiguous labeling, step underflow", zn);
      continue;
    }
    prev = cur;
    cur.z = zn;
    for (int j = 0; j < 3; ++j) cur[j] = vals[perm[j]];
    t = tn;
    if (h < Real(1) / 8) h *= 2;
  }
  return cur;
}

inline XiTriple continue_xi_path(const SpectralCurveData& curve, XiTriple seed,
                                 const std::vector<Complex>& waypoints,
                                 const PrecisionCtx& ctx) {
  for (const auto& w : waypoints) seed = continue_xi(curve, seed, w, ctx);
  return seed;
}

// Labeled triple at the real anchor x0 > all finite structure: the three
// values are real there and sort as ξ₂ < ξ₃ < ξ₁.
inline XiTriple xi_anchor(const SpectralCurveData& curve, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Complex x0(curve.rho);
  auto vals = xi_values_unlabeled(curve, x0, ctx);
  std::array<Real, 3> re{vals[0].re, vals[1].re, vals[2].re};
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return re[a] < re[b]; });
  for (int j = 0; j < 3; ++j)
    if (abs(vals[j].im) > ctx.tol_quarter())
      throw LabelingError("xi_anchor: non-real branch value at the anchor", x0);
  XiTriple t;
  t.z = x0;
  t.xi2 = Complex(vals[idx[0]].re);
  t.xi3 = Complex(vals[idx[1]].re);
  t.xi1 = Complex(vals[idx[2]].re);
  return t;
}

namespace detail {

inline bool segment_hits_real_interval(const Complex& p0, const Complex& p1, const Real& lo,
                                       const Real& hi) {
  if ((p0.im > 0 && p1.im > 0) || (p0.im < 0 && p1.im < 0)) return false;
  if (p0.im == 0 && p1.im == 0) {
    Real a = (std::min)(p0.re, p1.re), b = (std::max)(p0.re, p1.re);
    return b >= lo && a <= hi;
  }
  if (p0.im == p1.im) return false;
  Real t = -p0.im / (p1.im - p0.im);
  if (t < 0 || t > 1) return false;
  Real x = p0.re + t * (p1.re - p0.re);
  return x >= lo && x <= hi;
}

}  // namespace detail

// Cut intervals on the real axis for the current regime (Δ₁ and Δ₃).
inline std::vector<std::pair<Real, Real>> real_cut_intervals(const SpectralCurveData& curve) {
  std::vector<std::pair<Real, Real>> cuts;
  if (curve.a_star && curve.regime == Regime::Supercritical) {
    cuts.push_back({curve.a1, *curve.a_star});      // Δ₃
    cuts.push_back({*curve.a_star, curve.b1});      // Δ₁
  } else {
    cuts.push_back({curve.a1, curve.b1});           // Δ₁ (and conservative cover)
  }
  return cuts;
}

namespace detail {

inline bool path_is_clear(const SpectralCurveData& curve, const std::vector<Complex>& pts) {
  auto cuts = real_cut_intervals(curve);
  for (size_t i = 1; i < pts.size(); ++i) {
    for (const auto& [lo, hi] : cuts)
      if (segment_hits_real_interval(pts[i - 1], pts[i], lo, hi)) return false;
    if (curve.delta2 && first_intersection(pts[i - 1], pts[i], *curve.delta2)) return false;
  }
  return true;
}

}  // namespace detail

// Polygonal path from the anchor to z avoiding all declared cuts. Candidates
// are tried in order: direct, over-the-top same side, around the far left,
// and (when Δ₂ is attached) through the gap between a_* and the nearest real
// cut endpoint.
inline std::vector<Complex> plan_path(const SpectralCurveData& curve, const Complex& z,
                                      const PrecisionCtx& ctx) {
  if (!curve.delta2)
    throw LabelingError("plan_path: interior labeling requires the traced Δ₂ attached", z);
  Real Y = curve.rho;
  Real X = curve.rho;
  Complex x0(curve.rho);
  Real s = z.im > 0 ? Real(1) : (z.im < 0 ? Real(-1) : Real(1));
  std::vector<std::vector<Complex>> candidates;
  candidates.push_back({z});
  candidates.push_back({Complex(x0.re, s * Y), Complex(z.re, s * Y), z});
  candidates.push_back({Complex(x0.re, s * Y), Complex(-X, s * Y), Complex(-X, z.im == 0 ? s / 1000 : z.im), z});
  if (curve.delta2 && curve.a_star) {
    // through the gap adjacent to a_* on the side away from the real cuts
    Real gap;
    if (curve.regime == Regime::Supercritical)
      gap = curve.b1 + (curve.rho - curve.b1) / 2;  // no gap at a_*; approach from the right
    else
      gap = (*curve.a_star + curve.a1) / 2;
    Real dip = s / 1000;
    candidates.push_back({Complex(x0.re, s * Y), Complex(gap, s * Y), Complex(gap, dip),
                          Complex(z.re, dip), z});
  }
  for (auto& cand : candidates) {
    std::vector<Complex> full;
    full.push_back(x0);
    for (auto& w : cand) full.push_back(w);
    if (detail::path_is_clear(curve, full)) {
      full.erase(full.begin());
      return full;
    }
  }
  throw LabelingError("plan_path: no cut-avoiding path found", z);
}

// Labeled branch values at z. With a seed: short continuation from it.
// Without: continuation from the real anchor along a planned path (the
// labels are the global single-valued branches off the cuts).
namespace detail {

// Labeling for |z| ≥ rho. ξ₁ is the root nearest 2z² (separation 3z² beats
// the O(1/z) error everywhere out here). The other two only separate as
// (1−2α)/z, so they are matched on the reduced values δ = (ξ+z²)z ≈ α resp.
// 1−α: directly when |z| is large enough, otherwise by continuing the δ pair
// along the circle from the positive real axis (where sorting settles it).
inline XiTriple xi_label_outer(const SpectralCurveData& curve, const Complex& z,
                               const PrecisionCtx& ctx) {
  Real r = abs(z);
  auto split = [&](const Complex& w) {
    auto vals = xi_values_unlabeled(curve, w, ctx);
    Complex w2 = w * w;
    int i1 = 0;
    Real best = -1;
    for (int j = 0; j < 3; ++j) {
      Real d = abs(vals[j] - w2 * Real(2));
      if (best < 0 || d < best) { best = d; i1 = j; }
    }
    std::array<Complex, 2> delta;
    std::array<Complex, 2> raw;
    int k = 0;
    for (int j = 0; j < 3; ++j) {
      if (j == i1) continue;
      raw[k] = vals[j];
      delta[k] = (vals[j] + w2) * w;
      ++k;
    }
    return std::tuple<Complex, std::array<Complex, 2>, std::array<Complex, 2>>{vals[i1], raw,
                                                                               delta};
  };
  auto assemble = [&](const Complex& xi1, const std::array<Complex, 2>& raw, bool first_is_xi2) {
    XiTriple t;
    t.z = z;
    t.xi1 = xi1;
    t.xi2 = first_is_xi2 ? raw[0] : raw[1];
    t.xi3 = first_is_xi2 ? raw[1] : raw[0];
    return t;
  };
  Real sep = 1 - 2 * curve.alpha;
  Real r_direct = curve.rho + 8 / sep;
  auto [xi1, raw, delta] = split(z);
  if (r >= r_direct) {
    bool first_is_xi2 = abs(delta[0] - curve.alpha) < abs(delta[1] - curve.alpha);
    return assemble(xi1, raw, first_is_xi2);
  }
  // walk the circle from the real anchor at radius r, tracking the delta pair
  // (slot 0 held to the ξ₂ side throughout)
  Real theta = arg(z);
  std::array<Complex, 2> anchor_delta;
  {
    auto [x1, rr, dd] = split(Complex(r));
    (void)x1;
    (void)rr;
    // on the positive real axis the lower pair sorts as xi2 < xi3 and
    // delta = (xi + x²)x preserves that order (x > 0), so the smaller delta
    // is the alpha (ξ₂) side
    anchor_delta = dd;
    if (anchor_delta[0].re > anchor_delta[1].re) std::swap(anchor_delta[0], anchor_delta[1]);
  }
  int steps = 32;
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool ok = true;
    std::array<Complex, 2> cur = anchor_delta;
    std::array<Complex, 2> cur_raw = raw;  // only valid once the walk reaches z
    for (int k = 1; k <= steps; ++k) {
      Complex w = (k == steps) ? z : polar(r, theta * k / steps);
      auto [x1, rr, dd] = split(w);
      (void)x1;
      Real keep = abs(dd[0] - cur[0]) + abs(dd[1] - cur[1]);
      Real swp = abs(dd[1] - cur[0]) + abs(dd[0] - cur[1]);
      if ((std::min)(keep, swp) * 3 > (std::max)(keep, swp)) {
        ok = false;
        break;
      }
      if (swp < keep) {
        std::swap(dd[0], dd[1]);
        std::swap(rr[0], rr[1]);
      }
      cur = dd;
      cur_raw = rr;
    }
    if (ok) {
      XiTriple t;
      t.z = z;
      t.xi1 = xi1;
      t.xi2 = cur_raw[0];
      t.xi3 = cur_raw[1];
      return t;
    }
    steps *= 3;
  }
  throw LabelingError("xi_label_outer: circle tracking did not stabilize", z);
}

}  // namespace detail

inline XiTriple xi_at(const Complex& z, const SpectralCurveData& curve,
                      const std::optional<XiTriple>& seed, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  if (seed) return continue_xi(curve, *seed, z, ctx);
  if (abs(z) >= curve.rho) return detail::xi_label_outer(curve, z, ctx);
  XiTriple anchor = xi_anchor(curve, ctx);
  if (abs(z - anchor.z) == 0) return anchor;
  return continue_xi_path(curve, anchor, plan_path(curve, z, ctx), ctx);
}

inline XiTriple xi_at(const Complex& z, const SpectralCurveData& curve, const PrecisionCtx& ctx) {
  return xi_at(z, curve, std::nullopt, ctx);
}

// Residuals of the elementary symmetric functions: e1 = 0, e2 = −R, e3 = −D.
inline Real xi_symmetric_residual(const XiTriple& t, const SpectralCurveData& curve) {
  Complex e1 = t.xi1 + t.xi2 + t.xi3;
  Complex e2 = t.xi1 * t.xi2 + t.xi1 * t.xi3 + t.xi2 * t.xi3;
  Complex e3 = t.xi1 * t.xi2 * t.xi3;
  Complex R = curve.R_at(t.z), D = curve.D_at(t.z);
  Real scale = 1 + abs(R) + abs(D);
  return (std::max)({abs(e1), abs(e2 + R), abs(e3 + D)}) / scale;
}

struct BranchPointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constructs the curve: coefficients, reduced discriminant and its clustered
// roots; regime is classified against the pinned transition constants.
inline SpectralCurveData make_curve(const Real& alpha, const PrecisionCtx& ctx) {
  if (!(alpha > 0) || !(alpha < Real(1) / 2))
    throw std::invalid_argument("make_curve: alpha must be in (0, 1/2)");
  ScopedPrecision scope(ctx);
  SpectralCurveData cv;
  cv.alpha = alpha;
  cv.tau = alpha * (1 - alpha);
  cv.c = c_of_alpha(alpha, ctx);
  const Real& c = cv.c;
  const Real& tau = cv.tau;
  cv.R = ComplexPoly({Complex(-c), Complex(-3), Complex(0), Complex(0), Complex(3)});
  cv.D = ComplexPoly({Complex(-3 * tau), Complex(0), Complex(c), Complex(3), Complex(0),
                      Complex(0), Complex(-2)});
  // 4R³ − 27D² with the exactly-cancelling z¹²,z⁹,z⁸ terms removed:
  cv.disc = ComplexPoly({Complex(-4 * c * c * c - 243 * tau * tau), Complex(-36 * c * c),
                         Complex(162 * c * tau - 108 * c), Complex(486 * tau - 108),
                         Complex(9 * c * c), Complex(54 * c), Complex(81 - 324 * tau)});

  auto clusters = cluster_roots(poly_roots_raw(cv.disc, ctx), ctx,
                                pow(Real(10), -int(ctx.digits) / 6));
  std::vector<Root> simple;
  std::vector<Root> multi;
  for (const auto& r : clusters) (r.multiplicity == 1 ? simple : multi).push_back(r);
  if (multi.size() != 1 || multi[0].multiplicity != 2) {
    if (!multi.empty() && multi[0].multiplicity >= 3)
      throw BranchPointError(
          "branch_points: order-3 cluster (tau at/near 1/12, node meets b1); use the coalescent "
          "branch or higher precision");
    throw BranchPointError("branch_points: discriminant root clustering ambiguous");
  }
  if (abs(multi[0].value.im) > ctx.tol_quarter())
    throw BranchPointError("branch_points: node is not real");
  cv.b_star = multi[0].value.re;
  std::vector<Root> reals, complexes;
  for (const auto& r : simple)
    (abs(r.value.im) < ctx.tol_quarter() ? reals : complexes).push_back(r);
  if (reals.size() != 2 || complexes.size() != 2)
    throw BranchPointError("branch_points: expected 2 real + 2 complex simple roots");
  cv.a1 = (std::min)(reals[0].value.re, reals[1].value.re);
  cv.b1 = (std::max)(reals[0].value.re, reals[1].value.re);
  cv.a2 = complexes[0].value.im < 0 ? complexes[0].value : complexes[1].value;
  cv.b2 = conj(cv.a2);
  if (!(cv.a2.im < 0)) throw BranchPointError("branch_points: conjugate pair degenerate");
  cv.rho = (std::max)({abs(Real(cv.b1)), abs(Real(cv.a1)), abs(cv.a2), abs(Real(cv.b_star))}) + 2;
  if (cv.rho < 4) cv.rho = 4;

  TransitionConstants tc = pinned_transitions();
  cv.regime = alpha < tc.alpha_c
                  ? Regime::Subcritical
                  : (alpha < tc.alpha_2 ? Regime::Intermediate : Regime::Supercritical);
  return cv;
}

struct RegimeClassification {
  Regime regime;
  std::string tau_band;
  bool near_transition = false;  // within 10^(−digits/4) of a transition value
};

inline RegimeClassification classify_regime(const Real& alpha, const TransitionConstants& tc,
                                            const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  RegimeClassification rc;
  Real tau = alpha * (1 - alpha);
  rc.regime = alpha < tc.alpha_c
                  ? Regime::Subcritical
                  : (alpha < tc.alpha_2 ? Regime::Intermediate : Regime::Supercritical);
  if (tau < tc.tau0)
    rc.tau_band = "(0,tau0)";
  else if (tau < tc.tau1)
    rc.tau_band = "(tau0,tau1)";
  else if (tau < tc.tau_c)
    rc.tau_band = "(tau1,tau_c)";
  else if (tau < tc.tau2)
    rc.tau_band = "(tau_c,tau2)";
  else
    rc.tau_band = "(tau2,1/4)";
  // the pinned constants carry ~7 printed digits, so the proximity band can
  // never be tighter than that regardless of working precision
  Real tol = (std::max)(ctx.tol_quarter(), Real(Real(1) / 1000000));
  for (const Real& t : {tc.tau0, tc.tau1, tc.tau_c, tc.tau2})
    if (abs(tau - t) < tol) rc.near_transition = true;
  for (const Real& a : {tc.alpha_c, tc.alpha_2})
    if (abs(alpha - a) < tol) rc.near_transition = true;
  return rc;
}

}  // namespace mopslab
