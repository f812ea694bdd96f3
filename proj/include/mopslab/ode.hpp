#pragma once

#include "mopslab/arc.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

// One field evaluation: direction of travel plus the data carried along the
// arc. `q` feeds the running ∫ Q dz (trajectory invariant); xi is the
// continued triple when the caller tracks it.
struct FieldSample {
  Complex dir;
  Complex q;
  std::array<Complex, 3> xi{};
  bool has_xi = false;
};

enum class StopReason {
  RealAxisCrossing,
  BranchBall,
  OutOfBox,
  ArclengthCap,
  BarrierHit,
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::RealAxisCrossing: return "real_axis_crossing";
    case StopReason::BranchBall: return "branch_ball";
    case StopReason::OutOfBox: return "out_of_box";
    case StopReason::ArclengthCap: return "arclength_cap";
    case StopReason::BarrierHit: return "barrier_hit";
  }
  return "?";
}

struct TraceEvents {
  bool stop_on_real_axis = false;
  Real min_arclength_for_real_axis = 0;  // ignore crossings before this arclength
  std::vector<Complex> branch_balls;
  Real ball_radius = Real(1) / 10000;
  Real box = 10;
  Real max_arclength = 40;
  const ArcPolyline* barrier = nullptr;  // stop on first intersection
  Complex barrier_skip_point;
  Real barrier_skip_radius = 0;
};

struct TraceResult {
  ArcPolyline arc;
  StopReason reason = StopReason::ArclengthCap;
  int ball_index = -1;
  std::optional<PolylineHit> barrier_hit;
};

struct TraceError : std::runtime_error {
  TraceError(const std::string& msg, Complex where) : std::runtime_error(msg), position(where) {}
  Complex position;
};

namespace detail {

struct RKState {
  Complex z;  // position
  Complex w;  // running ∫ Q dz
};

// Cash-Karp 4(5) tableau.
template <typename Field>
RKState rk_step(Field&& field, const RKState& y, const Real& h, Real& err_out) {
  auto deriv = [&](const Complex& z) {
    FieldSample s = field(z);
    Real m = abs(s.dir);
    if (m == 0) throw TraceError("ode_trace: vanishing field", z);
    Complex u = s.dir / m;
    return RKState{u, s.q * u};
  };
  static const int S = 6;
  // a[i][j], b5 (5th order), b4 (embedded 4th order)
  const Real a21 = Real(1) / 5;
  const Real a31 = Real(3) / 40, a32 = Real(9) / 40;
  const Real a41 = Real(3) / 10, a42 = Real(-9) / 10, a43 = Real(6) / 5;
  const Real a51 = Real(-11) / 54, a52 = Real(5) / 2, a53 = Real(-70) / 27, a54 = Real(35) / 27;
  const Real a61 = Real(1631) / 55296, a62 = Real(175) / 512, a63 = Real(575) / 13824,
             a64 = Real(44275) / 110592, a65 = Real(253) / 4096;
  const Real b1 = Real(37) / 378, b3 = Real(250) / 621, b4 = Real(125) / 594,
             b6 = Real(512) / 1771;
  const Real e1 = b1 - Real(2825) / 27648, e3 = b3 - Real(18575) / 48384,
             e4 = b4 - Real(13525) / 55296, e5 = Real(0) - Real(277) / 14336,
             e6 = b6 - Real(1) / 4;

  std::array<RKState, S> k;
  k[0] = deriv(y.z);
  k[1] = deriv(y.z + h * a21 * k[0].z);
  k[2] = deriv(y.z + h * (a31 * k[0].z + a32 * k[1].z));
  k[3] = deriv(y.z + h * (a41 * k[0].z + a42 * k[1].z + a43 * k[2].z));
  k[4] = deriv(y.z + h * (a51 * k[0].z + a52 * k[1].z + a53 * k[2].z + a54 * k[3].z));
  k[5] = deriv(y.z + h * (a61 * k[0].z + a62 * k[1].z + a63 * k[2].z + a64 * k[3].z +
                          a65 * k[4].z));

  RKState out;
  out.z = y.z + h * (b1 * k[0].z + b3 * k[2].z + b4 * k[3].z + b6 * k[5].z);
  out.w = y.w + h * (b1 * k[0].w + b3 * k[2].w + b4 * k[3].w + b6 * k[5].w);
  Complex ez = h * (e1 * k[0].z + e3 * k[2].z + e4 * k[3].z + e5 * k[4].z + e6 * k[5].z);
  err_out = abs(ez);
  return out;
}

}  // namespace detail

// Adaptive embedded RK trace of dz/ds = field(z)/|field(z)| (unit speed, s =
// arclength). Local error per unit arclength ≤ 10^(−digits/4). The running
// ∫ Q dz is integrated alongside and stored per node.
template <typename Field>
TraceResult ode_trace(Field&& field, const Complex& start, const TraceEvents& ev,
                      const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Real tol = ctx.tol_quarter();
  Real h = Real(1) / 100;
  Real h_min = pow(Real(10), -int(ctx.digits));

  TraceResult res;
  ArcPolyline& arc = res.arc;
  detail::RKState y{start, Complex()};
  Real s = 0;

  auto record = [&](const detail::RKState& st) {
    FieldSample smp = field(st.z);
    arc.nodes.push_back(st.z);
    arc.q_values.push_back(smp.q);
    arc.cum_q.push_back(st.w);
    if (smp.has_xi) arc.xi.push_back(smp.xi);
  };
  record(y);

  // Refine a crossing Im z(θh) = 0 (or box exit etc.) by shrinking the step.
  auto step_fraction = [&](const detail::RKState& from, Real hh, const Real& frac) {
    Real dummy;
    return detail::rk_step(field, from, hh * frac, dummy);
  };

  const int max_steps = 200000;
  for (int step = 0; step < max_steps; ++step) {
    if (s >= ev.max_arclength) {
      res.reason = StopReason::ArclengthCap;
      arc.end_kind = EndpointKind::Cap;
      return res;
    }
    if (h > ev.max_arclength - s) h = ev.max_arclength - s;

    Real err;
    detail::RKState ynew = detail::rk_step(field, y, h, err);
    Real tol_here = tol * h;
    if (err > tol_here && h > h_min) {
      Real shrink = Real(9) / 10 * pow(tol_here / err, Real(1) / 4);
      if (shrink < Real(1) / 10) shrink = Real(1) / 10;
      h *= shrink;
      if (h < h_min) throw TraceError("ode_trace: step underflow", y.z);
      continue;
    }

    // Events, in priority order along the step.
    // 1. Real-axis crossing.
    if (ev.stop_on_real_axis && s + h > ev.min_arclength_for_real_axis &&
        ((y.z.im > 0) != (ynew.z.im > 0) || ynew.z.im == 0)) {
      // Bisection on the step fraction.
      Real lo = 0, hi = 1;
      detail::RKState best = ynew;
      for (int it = 0; it < int(ctx.digits) * 4; ++it) {
        Real mid = (lo + hi) / 2;
        detail::RKState ymid = step_fraction(y, h, mid);
        if ((ymid.z.im > 0) == (y.z.im > 0) && ymid.z.im != 0)
          lo = mid;
        else {
          hi = mid;
          best = ymid;
        }
        if (abs(best.z.im) < ctx.tol_quarter() / 100) break;
      }
      record(best);
      res.reason = StopReason::RealAxisCrossing;
      arc.end_kind = EndpointKind::RealAxisCrossing;
      return res;
    }
    // 2. Branch-point ball (segment test: the ball can be smaller than the step).
    {
      int hit_ball = -1;
      for (size_t bi = 0; bi < ev.branch_balls.size(); ++bi) {
        if (distance_point_segment(ev.branch_balls[bi], y.z, ynew.z) < ev.ball_radius) {
          hit_ball = int(bi);
          break;
        }
      }
      if (hit_ball >= 0) {
        const Complex& c = ev.branch_balls[hit_ball];
        detail::RKState yend = ynew;
        if (abs(ynew.z - c) >= ev.ball_radius) {
          // Shrink to the first entry into the ball.
          Real lo = 0, hi = 1;
          for (int it = 0; it < 80; ++it) {
            Real mid = (lo + hi) / 2;
            detail::RKState ymid = step_fraction(y, h, mid);
            if (abs(ymid.z - c) < ev.ball_radius) {
              hi = mid;
              yend = ymid;
            } else {
              lo = mid;
            }
            if (hi - lo < Real(1) / 1024) break;
          }
          if (abs(yend.z - c) >= ev.ball_radius) yend = step_fraction(y, h, hi);
        }
        record(yend);
        res.reason = StopReason::BranchBall;
        res.ball_index = hit_ball;
        arc.end_kind = EndpointKind::BranchPoint;
        return res;
      }
    }
    // 3. Barrier polyline intersection.
    if (ev.barrier) {
      auto hit = first_intersection(y.z, ynew.z, *ev.barrier,
                                    ev.barrier_skip_radius > 0 ? &ev.barrier_skip_point : nullptr,
                                    ev.barrier_skip_radius);
      if (hit) {
        detail::RKState yhit = step_fraction(y, h, hit->t);
        record(yhit);
        res.reason = StopReason::BarrierHit;
        res.barrier_hit = hit;
        res.barrier_hit->point = yhit.z;
        arc.end_kind = EndpointKind::Junction;
        return res;
      }
    }
    // 4. Bounding box.
    if (abs(ynew.z.re) > ev.box || abs(ynew.z.im) > ev.box) {
      record(ynew);
      res.reason = StopReason::OutOfBox;
      arc.end_kind = EndpointKind::Cap;
      return res;
    }

    y = ynew;
    s += h;
    record(y);

    if (err > 0) {
      Real grow = Real(9) / 10 * pow(tol_here / err, Real(1) / 5);
      if (grow > 4) grow = 4;
      if (grow > 1) h *= grow;
    } else {
      h *= 2;
    }
    if (h > Real(1) / 10) h = Real(1) / 10;
  }
  throw TraceError("ode_trace: step cap exceeded", y.z);
}

}  // namespace mopslab
