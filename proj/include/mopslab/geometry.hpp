#pragma once

#include "mopslab/ode.hpp"
#include "mopslab/spectral.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

struct SingularFieldError : std::runtime_error {
  SingularFieldError(const std::string& msg, Complex where)
      : std::runtime_error(msg), position(where) {}
  Complex position;
};

// Traces are geometric objects; running them at full ambient precision buys
// nothing (the per-node invariant budget 10^(−digits/8) is tied to the trace
// tolerance) and costs a lot. 64 digits keeps node positions good to ~1e−14,
// far below every downstream tolerance.
inline PrecisionCtx trace_ctx(const PrecisionCtx& ctx) {
  return PrecisionCtx((std::min)(ctx.digits, unsigned(64)), ctx.guard_digits);
}

// Local data at a branch point z0 where two sheets collide: the double root
// ξ_*, the coefficient β of the Puiseux expansion ξ = ξ_* ± β√(z−z0), and the
// three critical directions of −Q²dz² (Q ≈ 2β√(z−z0), so Re ∫Q dz = 0 leaves
// at angles (2/3)(π/2 + kπ − arg β)).
struct BranchLocal {
  Complex xi_star;
  Complex third;  // the non-colliding root
  Complex beta;
  std::array<Complex, 3> dirs;
};

inline BranchLocal branch_local(const SpectralCurveData& curve, const Complex& z0,
                                const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  auto vals = xi_values_unlabeled(curve, z0, ctx);
  // colliding pair = the two closest roots
  int pa = 0, pb = 1;
  Real best = -1;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      Real d = abs(vals[i] - vals[j]);
      if (best < 0 || d < best) { best = d; pa = i; pb = j; }
    }
  BranchLocal loc;
  loc.xi_star = (vals[pa] + vals[pb]) / Real(2);
  loc.third = vals[3 - pa - pb];
  Complex rp = curve.R.derivative().eval(z0);
  Complex dp = curve.D.derivative().eval(z0);
  if (abs(loc.xi_star) == 0) throw BranchPointError("branch_local: vanishing double root");
  loc.beta = sqrt((rp * loc.xi_star - dp) / (loc.xi_star * Real(3)));
  Real pi = real_pi();
  Real ab = arg(loc.beta);
  for (int k = 0; k < 3; ++k)
    loc.dirs[k] = polar(Real(1), (pi / 2 + k * pi - ab) * Real(2) / 3);
  return loc;
}

// Field callback for ode_trace: tracks the unlabeled root triple by
// continuity from a primed start (no global labeling needed, so it works on
// and across the cuts). Slots ia/ib carry the pair defining Q; the sign of Q
// is fixed at the start so that the travel direction i/Q matches the
// requested launch direction.
class QTracker {
 public:
  // Prime with an explicit slot assignment of the root triple at `start`.
  QTracker(const SpectralCurveData& curve, const PrecisionCtx& ctx, int ia, int ib,
           const Complex& start, const std::array<Complex, 3>& initial_triple)
      : curve_(&curve), ctx_(&ctx), ia_(ia), ib_(ib), base_(start), tri_(initial_triple) {}

  // Prime for a colliding-pair trace: the two closest roots go into the Q
  // slots, signed so that the travel direction i/Q matches `launch_dir`.
  QTracker(const SpectralCurveData& curve, const PrecisionCtx& ctx, int ia, int ib,
           const Complex& start, const Complex& launch_dir)
      : curve_(&curve), ctx_(&ctx), ia_(ia), ib_(ib), base_(start) {
    ScopedPrecision scope(ctx);
    auto vals = xi_values_unlabeled(curve, start, ctx);
    int pa = 0, pb = 1;
    Real best = -1;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        Real d = abs(vals[i] - vals[j]);
        if (best < 0 || d < best) { best = d; pa = i; pb = j; }
      }
    int other = 3 - pa - pb;
    Complex q = vals[pa] - vals[pb];
    if (abs(q) == 0) throw SingularFieldError("QTracker: degenerate start", start);
    Complex dir = complex_i() / q;
    if (dir.re * launch_dir.re + dir.im * launch_dir.im < 0) std::swap(pa, pb);
    tri_[ia_] = vals[pa];
    tri_[ib_] = vals[pb];
    tri_[3 - ia_ - ib_] = vals[other];
  }

  FieldSample operator()(const Complex& z) {
    ScopedPrecision scope(*ctx_);
    step_to(z);
    Complex q = tri_[ia_] - tri_[ib_];
    if (abs(q) < ctx_->tol_quarter())
      throw SingularFieldError("QTracker: field singular (zero of Q)", z);
    FieldSample s;
    s.q = q;
    s.dir = complex_i() / q;
    s.xi = tri_;
    s.has_xi = true;
    return s;
  }

 private:
  void step_to(const Complex& z) {
    Complex span = z - base_;
    if (abs(span) == 0) return;
    Real t = 0, h = 1;
    int guard = 0;
    while (t < 1) {
      if (t + h > 1) h = 1 - t;
      Complex cur = base_ + span * t;  // position tri_ currently lives at
      Complex w = base_ + span * (t + h);
      auto vals = xi_values_unlabeled(*curve_, w, *ctx_);
      // First-order analytic prediction: the ξ are locally analytic in z, so
      // the difference quotient from the last accepted move is a valid slope.
      std::array<Complex, 3> pred = tri_;
      if (have_prev_) {
        Complex dz_prev = cur - prev_base_;
        if (abs(dz_prev) > 0) {
          Complex ratio = (w - cur) / dz_prev;
          for (int k = 0; k < 3; ++k) pred[k] = tri_[k] + (tri_[k] - prev_tri_[k]) * ratio;
        }
      }
      static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      Real best = -1, second = -1;
      int best_p = 0;
      for (int p = 0; p < 6; ++p) {
        Real cost = abs(vals[perms[p][0]] - pred[0]) + abs(vals[perms[p][1]] - pred[1]) +
                    abs(vals[perms[p][2]] - pred[2]);
        if (best < 0 || cost < best) {
          second = best;
          best = cost;
          best_p = p;
        } else if (second < 0 || cost < second) {
          second = cost;
        }
      }
      Real sep = -1;  // smallest root separation at w
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          Real d = abs(vals[i] - vals[j]);
          if (sep < 0 || d < sep) sep = d;
        }
      bool confident = (best * 3 <= second) || (best * 10 <= sep) || best == 0;
      if (!confident) {
        h /= 2;
        if (++guard > 2000 || h < ctx_->eps())
          throw LabelingError("QTracker: ambiguous continuation", w);
        continue;
      }
      prev_tri_ = tri_;
      prev_base_ = cur;
      have_prev_ = true;
      for (int k = 0; k < 3; ++k) tri_[k] = vals[perms[best_p][k]];
      t += h;
      h *= 2;
    }
    base_ = z;
  }

  const SpectralCurveData* curve_;
  const PrecisionCtx* ctx_;
  int ia_, ib_;
  Complex base_;
  std::array<Complex, 3> tri_{};
  std::array<Complex, 3> prev_tri_{};
  Complex prev_base_;
  bool have_prev_ = false;
};

// Direction of the trajectory of −Q²dz² through z for the given sheet
// pairing, from globally labeled branch values: i/Q, unit-normalized.
inline Complex trajectory_field(const Complex& z, int i, int j, const SpectralCurveData& curve,
                                const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  XiTriple t = xi_at(z, curve, ctx);
  Complex q = t[i - 1] - t[j - 1];
  if (abs(q) < ctx.tol_quarter())
    throw SingularFieldError("trajectory_field: |Q| below threshold", z);
  Complex d = complex_i() / q;
  return d / abs(d);
}

struct Delta2Trace {
  ArcPolyline arc;  // oriented a2 → a_* → b2
  Real a_star;
};

// Traces supp μ₂ from a₂: launch along the critical direction pointing at the
// real axis, stop at the crossing (= a_*), mirror by conjugation for the
// upper half. Q = ξ₁ − ξ₃ (the pair colliding at a₂/b₂).
inline Delta2Trace support_delta2(const SpectralCurveData& curve, const PrecisionCtx& ctx) {
  PrecisionCtx tctx = trace_ctx(ctx);
  ScopedPrecision scope(tctx);
  BranchLocal loc = branch_local(curve, curve.a2, tctx);
  Complex d = loc.dirs[0];
  for (const Complex& cand : loc.dirs)
    if (cand.im > d.im) d = cand;
  Real eps = Real(1) / 10000;
  Complex start = curve.a2 + d * eps;

  QTracker field(curve, tctx, 0, 2, start, d);
  TraceEvents ev;
  ev.stop_on_real_axis = true;
  TraceResult tr = ode_trace(field, start, ev, tctx);
  if (tr.reason != StopReason::RealAxisCrossing)
    throw TraceError(std::string("support_delta2: trace ended without real-axis crossing (") +
                         to_string(tr.reason) + ")",
                     tr.arc.empty() ? start : tr.arc.back());

  ArcPolyline lower;
  lower.branch_pair = "xi1-xi3";
  lower.start_kind = EndpointKind::BranchPoint;
  lower.nodes.push_back(curve.a2);
  lower.q_values.push_back(Complex());
  lower.cum_q.push_back(Complex());
  lower.xi.push_back({loc.xi_star, loc.third, loc.xi_star});
  lower.append(tr.arc);
  Real a_star = lower.nodes.back().re;
  lower.nodes.back() = Complex(a_star);  // snap the crossing onto the axis
  {
    // refresh the carried branch values at the snapped position
    auto vals = xi_values_unlabeled(curve, lower.nodes.back(), tctx);
    std::array<Complex, 3>& xi = lower.xi.back();
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    int best_p = 0;
    Real best_cost = -1;
    for (int p = 0; p < 6; ++p) {
      Real cost = 0;
      for (int k = 0; k < 3; ++k) cost += abs(vals[perms[p][k]] - xi[k]);
      if (best_cost < Real(0) || cost < best_cost) {
        best_cost = cost;
        best_p = p;
      }
    }
    for (int k = 0; k < 3; ++k) xi[k] = vals[perms[best_p][k]];
    lower.q_values.back() = xi[0] - xi[2];
  }
  lower.end_kind = EndpointKind::RealAxisCrossing;

  ArcPolyline upper = lower.conjugate_mirror();  // a_* → b2
  ArcPolyline full = lower;
  full.append(upper);
  full.start_kind = EndpointKind::BranchPoint;
  full.end_kind = EndpointKind::BranchPoint;
  return Delta2Trace{std::move(full), a_star};
}

// Computes Δ₂ and stores it (with a_*) on the curve so that interior branch
// labeling (xi_at path planning) becomes available.
inline void attach_geometry(SpectralCurveData& curve, const PrecisionCtx& ctx) {
  if (curve.delta2) return;
  Delta2Trace d2 = support_delta2(curve, ctx);
  curve.a_star = d2.a_star;
  curve.delta2 = std::make_shared<const ArcPolyline>(std::move(d2.arc));
}

struct RealInterval {
  Real lo, hi;
};

struct SupportSet {
  RealInterval delta1{};
  ArcPolyline delta2;
  std::optional<RealInterval> delta3;
  Real a_star;
  std::vector<ArcPolyline> e_alpha;
  std::optional<Complex> a_b;
  ArcPolyline omega_alpha_boundary;  // empty when Ω_α = ∅
};

// Assembles the measure supports. Below τ_c the crossing a_* sits left of a₁
// and Δ₁ = [a₁,b₁] with Δ₃ empty; above τ_c it splits: Δ₃ = [a₁,a_*],
// Δ₁ = [a_*,b₁]. E_α/Ω_α are filled in by compute_E_alpha (needs Φ₃).
inline SupportSet compute_supports(SpectralCurveData& curve, const PrecisionCtx& ctx) {
  attach_geometry(curve, ctx);
  SupportSet ss;
  ss.delta2 = *curve.delta2;
  ss.a_star = *curve.a_star;
  if (ss.a_star < curve.a1) {
    ss.delta1 = RealInterval{curve.a1, curve.b1};
  } else {
    ss.delta1 = RealInterval{ss.a_star, curve.b1};
    ss.delta3 = RealInterval{curve.a1, ss.a_star};
  }
  return ss;
}

enum class TransitionEvent { Tau1, TauC, Tau2 };

namespace detail {

// Sheet-1 critical trajectory through a₂^{(1)} (Q = ξ₂ − ξ₃). a₂ joins
// sheets 1 and 3, so −Q²dz² has an order-2 critical point there whose
// z-plane picture is a straight line through a₂ with directions ±i/Q. The
// ray relevant to the τ₁/τ₂ events is the one heading right (toward a₁);
// the sheet-1 chart (which of the two colliding √-branches is ξ₃ on that
// side) is selected by matching against globally labeled values at a nearby
// probe point. Returns the ray's real-axis crossing.
inline Real sheet1_crossing(SpectralCurveData& curve, const PrecisionCtx& tctx) {
  attach_geometry(curve, tctx);
  ScopedPrecision scope(tctx);
  BranchLocal loc = branch_local(curve, curve.a2, tctx);
  Complex qbar = loc.third - loc.xi_star;
  Complex d = complex_i() / qbar;
  d = d / abs(d);
  if (d.re < 0) d = -d;
  Real eps = Real(1) / 10000;
  Complex start = curve.a2 + d * eps;
  Complex zp = curve.a2 + d * (Real(5) / 100);
  XiTriple labeled = xi_at(zp, curve, tctx);

  Complex dev0 = loc.beta * sqrt(d * eps);
  std::array<std::array<Complex, 3>, 2> tris;
  Real mism[2];
  for (int k = 0; k < 2; ++k) {
    Complex dev = (k == 0) ? dev0 : -dev0;
    tris[k] = {loc.xi_star - dev, loc.third, loc.xi_star + dev};
    QTracker probe(curve, tctx, 1, 2, start, tris[k]);
    mism[k] = abs(probe(zp).xi[2] - labeled.xi3);
  }
  int chart = mism[0] < mism[1] ? 0 : 1;
  if (!(mism[chart] < tctx.tol_eighth()))
    throw LabelingError("sheet1_crossing: could not identify the sheet-1 chart", zp);

  // enforce travel away from a2 (swapping the Q slots flips i/Q)
  QTracker f0(curve, tctx, 1, 2, start, tris[chart]);
  Complex dir0 = f0(start).dir;
  bool away = dir0.re * d.re + dir0.im * d.im > 0;
  QTracker field = away ? QTracker(curve, tctx, 1, 2, start, tris[chart])
                        : QTracker(curve, tctx, 2, 1, start, tris[chart]);
  TraceEvents ev;
  ev.stop_on_real_axis = true;
  TraceResult tr = ode_trace(field, start, ev, tctx);
  if (tr.reason != StopReason::RealAxisCrossing)
    throw TraceError(std::string("sheet1_crossing: trace ended without crossing (") +
                         to_string(tr.reason) + ")",
                     tr.arc.empty() ? start : tr.arc.back());
  return tr.arc.back().re;
}

}  // namespace detail

// Signed functional whose zero is the requested transition:
//   τ₁  → (sheet-1 crossing) − a₁     (trajectory a₂→b₂ on sheet 1 hits a₁)
//   τ_c → a_* − a₁                    (Δ₂ hits a₁, i.e. sheet-2 version)
//   τ₂  → (sheet-1 crossing) − a_*    (a_* collides with that trajectory)
inline Real transition_event_probe(const Real& tau, TransitionEvent which,
                                   const PrecisionCtx& ctx) {
  PrecisionCtx tctx = trace_ctx(ctx);
  ScopedPrecision scope(tctx);
  SpectralCurveData curve = make_curve(alpha_of_tau(tau), tctx);
  attach_geometry(curve, tctx);
  switch (which) {
    case TransitionEvent::TauC: return *curve.a_star - curve.a1;
    case TransitionEvent::Tau1: return detail::sheet1_crossing(curve, tctx) - curve.a1;
    case TransitionEvent::Tau2: return detail::sheet1_crossing(curve, tctx) - *curve.a_star;
  }
  throw std::logic_error("transition_event_probe: bad event");
}

// Locates τ₁, τ_c, τ₂ by bisection on the event probes (to 1e−8) and derives
// α_c, α_2; τ₀ = 1/12 is analytic.
inline TransitionConstants find_transition_taus(const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  auto bisect = [&](TransitionEvent which, Real lo, Real hi) {
    Real flo = transition_event_probe(lo, which, ctx);
    Real fhi = transition_event_probe(hi, which, ctx);
    if ((flo > 0) == (fhi > 0))
      throw std::runtime_error("find_transition_taus: bracket does not straddle the event");
    Real tol = pow(Real(10), -8);
    while (hi - lo > tol) {
      Real mid = (lo + hi) / 2;
      Real fm = transition_event_probe(mid, which, ctx);
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return (lo + hi) / 2;
  };
  TransitionConstants tc;
  tc.tau0 = Real(1) / 12;
  tc.tau1 = bisect(TransitionEvent::Tau1, Real("0.09"), Real("0.19"));
  tc.tau_c = bisect(TransitionEvent::TauC, Real("0.18"), Real("0.20"));
  tc.tau2 = bisect(TransitionEvent::Tau2, Real("0.22"), Real("0.235"));
  tc.alpha_c = alpha_of_tau(tc.tau_c);
  tc.alpha_2 = alpha_of_tau(tc.tau2);
  return tc;
}

// One-sided Hausdorff distance from a point cloud to a union of real
// intervals and polylines.
struct SupportTargets {
  std::vector<RealInterval> intervals;
  std::vector<const ArcPolyline*> arcs;
};

inline Real hausdorff_to_support(const std::vector<Complex>& points, const SupportTargets& tgt,
                                 const PrecisionCtx& ctx) {
  if (points.empty() || (tgt.intervals.empty() && tgt.arcs.empty()))
    throw std::invalid_argument("hausdorff_to_support: empty input");
  ScopedPrecision scope(ctx);
  Real worst = 0;
  for (const Complex& p : points) {
    Real best = -1;
    for (const auto& iv : tgt.intervals) {
      Real d = distance_point_real_interval(p, iv.lo, iv.hi);
      if (best < 0 || d < best) best = d;
    }
    for (const ArcPolyline* a : tgt.arcs) {
      Real d = distance_point_polyline(p, *a);
      if (best < 0 || d < best) best = d;
    }
    if (best > worst) worst = best;
  }
  return worst;
}

}  // namespace mopslab
