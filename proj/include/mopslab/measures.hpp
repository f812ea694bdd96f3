#pragma once

// Densities and masses of the limiting measures, the g-functions with their
// normalization constants, and the Phi combinations.
//
//   dμ₁ = (ξ₁₊−ξ₂₊)/(2πi) ds on Δ₁,   dμ₂ = (ξ₁₊−ξ₃₊)/(2πi) ds on Δ₂,
//   dμ₃ = (ξ₃₊−ξ₂₊)/(2πi) ds on Δ₃ (supercritical only),
//
//   g₁(z) = ∫_{b₁}^z ξ₁ + c₁   on ℂ∖((−∞,b₁]∪Δ₂),
//   g₂(z) = ∫_{b₁}^z ξ₂ + c₂   on ℂ∖(−∞,b₁],
//   g₃(z) = ∫_{a_*}^z ξ₃ + c₃  on ℂ∖((−∞,a_*]∪Δ₂), path leaving a_* toward +∞,
//
// with c₁ = c₂ = −πi|μ₂| and c₃ = −∫_{a_*}^{b₁} ξ₁₋ ds.  Integration paths are
// planned over a small waypoint graph that avoids the declared cut of each g
// (outside of which the integrand is a single-valued branch), and the branch
// is carried along the path by nearest-root continuation with an ambiguity
// guard.

#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "quadrature.hpp"

namespace mopslab {

struct MeasureError : std::runtime_error {
  explicit MeasureError(const std::string& what) : std::runtime_error(what) {}
};

struct Masses {
  Real mu1, mu2, mu3;
};

namespace detail {

// Root of the cubic at real x with the largest imaginary part (the upper
// member of the conjugate pair on a real cut).
inline Complex upper_root(const SpectralCurveData& curve, const Real& x, const PrecisionCtx& ctx) {
  auto vals = xi_values_unlabeled(curve, Complex(x), ctx);
  Complex best = vals[0];
  for (const Complex& v : vals)
    if (v.im > best.im) best = v;
  return best;
}

// Carries one root of the cubic along a path by nearest matching, halving the
// step whenever the match is ambiguous.
struct RootWalker {
  const SpectralCurveData* curve = nullptr;
  PrecisionCtx ctx{64};
  Complex pos;
  Complex val;
  // Matching the nearest root to the raw previous value is fooled at a node
  // of the curve, where two branches cross with a common drift: the other
  // branch can land right on the stale value.  A first-order prediction keeps
  // the branches apart there because their derivatives differ.
  bool has_slope = false;
  Complex slope;

  void seed(const Complex& z, const Complex& v) {
    pos = z;
    val = v;
    has_slope = false;
  }

  void walk_to(const Complex& z, int depth = 0) {
    Complex dz = z - pos;
    // Without a slope even a small apparent motion can be a hop in disguise
    // (the other branch landing near the stale value looks like a tiny step).
    // A short probe step pins the derivative down first.
    if (!has_slope && !(abs(dz) == 0) && depth <= 60) {
      walk_to(pos + dz / Real(1024), depth + 1);
      walk_to(z, depth + 1);
      return;
    }
    // Adaptive quadrature revisits a leg in non-monotone order, so requested
    // steps can span most of it.  Over such distances the secant prediction
    // can drift past half the gap between two moderately separated roots and
    // lock onto the wrong one while still passing the ratio guard; capping
    // the step keeps the prediction inside its linear range.
    if (abs(dz) > Real(1) / 10 && depth <= 60) {
      walk_to(pos + dz / Real(2), depth + 1);
      walk_to(z, depth + 1);
      return;
    }
    Complex pred = has_slope ? val + slope * dz : val;
    auto vals = xi_values_unlabeled(*curve, z, ctx);
    int ib = 0;
    Real d0 = abs(vals[0] - pred), d1 = Real(-1);
    for (int k = 1; k < 3; ++k) {
      Real d = abs(vals[k] - pred);
      if (d < d0) {
        d1 = d0;
        d0 = d;
        ib = k;
      } else if (d1 < Real(0) || d < d1) {
        d1 = d;
      }
    }
    if (d0 == 0 || d0 * 3 <= d1) {
      if (!(abs(dz) == 0)) {
        slope = (vals[ib] - val) / dz;
        has_slope = true;
      }
      pos = z;
      val = vals[ib];
      return;
    }
    if (depth > 60)
      throw LabelingError("RootWalker: ambiguous continuation", z);
    Complex mid = (pos + z) / Real(2);
    walk_to(mid, depth + 1);
    walk_to(z, depth + 1);
  }
};

// ∫_{z0}^{z1} of the tracked root along the straight leg.  A SqrtStart /
// SqrtEnd leg has a branch point of the root at that endpoint and uses the
// quadratic reparametrization that flattens the √ singularity.  The walker
// may start anywhere (it backtracks as needed) and is left at z1, except for
// SqrtEnd legs where stepping onto the branch point itself is ambiguous.
enum class LegMode { Plain, SqrtStart, SqrtEnd };

inline Complex integrate_tracked_leg(RootWalker& w, const Complex& z0, const Complex& z1,
                                     const PrecisionCtx& ctx, LegMode mode = LegMode::Plain) {
  Complex span = z1 - z0;
  auto f = [&](const Real& t) -> Complex {
    if (mode == LegMode::SqrtStart) {
      w.walk_to(z0 + span * (t * t));
      return w.val * (2 * t);
    }
    if (mode == LegMode::SqrtEnd) {
      Real u = 1 - t;
      w.walk_to(z1 - span * (u * u));
      return w.val * (2 * u);
    }
    w.walk_to(z0 + span * t);
    return w.val;
  };
  Complex val = integrate_adaptive(f, Real(0), Real(1), ctx) * span;
  if (mode != LegMode::SqrtEnd) w.walk_to(z1);
  return val;
}

// ---------------------------------------------------------------------------
// Path planning for the g-integrals.

struct GCuts {
  Real ray_end;                    // cut (−∞, ray_end] on the real axis
  bool avoid_arc = false;          // Δ₂ is a cut (g₁, g₃)
  std::vector<Complex> outline;    // decimated Δ₂ polyline
  std::vector<Complex> obstacles;  // branch points + node (tracking safety)
};

inline Real dist_to_ray(const Complex& p, const Real& ray_end) {
  if (p.re <= ray_end) return abs(p.im);
  return abs(p - Complex(ray_end));
}

inline Real dist_to_outline(const Complex& p, const std::vector<Complex>& outline) {
  if (outline.size() < 2) return Real(1000);
  Real best = abs(p - outline[0]);
  for (size_t i = 1; i < outline.size(); ++i) {
    Real d = distance_point_segment(p, outline[i - 1], outline[i]);
    if (d < best) best = d;
  }
  return best;
}

inline bool segments_cross(const Complex& a, const Complex& b, const Complex& c,
                           const Complex& d) {
  auto orient = [](const Complex& p, const Complex& q, const Complex& r) -> int {
    Real v = (q.re - p.re) * (r.im - p.im) - (q.im - p.im) * (r.re - p.re);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

inline Real cut_distance(const Complex& p, const GCuts& cuts) {
  Real d = dist_to_ray(p, cuts.ray_end);
  if (cuts.avoid_arc) d = (std::min)(d, dist_to_outline(p, cuts.outline));
  return d;
}

// A leg is admissible when it never crosses a cut and keeps a margin from the
// cuts and from the branch points, relaxed inside approach cones around its
// own endpoints (the base point sits on the cut and targets may be offset
// boundary points).
inline bool leg_ok(const Complex& a, const Complex& b, const GCuts& cuts, const Real& margin,
                   bool relax_a, bool relax_b, const Real& clear_b) {
  // exact crossing tests
  if (cuts.avoid_arc)
    for (size_t i = 1; i < cuts.outline.size(); ++i)
      if (segments_cross(a, b, cuts.outline[i - 1], cuts.outline[i])) {
        // crossings inside an endpoint's relaxation cone are re-checked by
        // the sampled clearance below; far crossings are fatal
        Real da = (std::min)(abs(cuts.outline[i - 1] - a), abs(cuts.outline[i] - a));
        Real db = (std::min)(abs(cuts.outline[i - 1] - b), abs(cuts.outline[i] - b));
        if (!(relax_a && da < margin * 2) && !(relax_b && db < margin * 2)) return false;
      }
  if ((a.im > 0) != (b.im > 0) && a.im != b.im) {
    Real t = a.im / (a.im - b.im);
    Real xcross = a.re + t * (b.re - a.re);
    if (xcross <= cuts.ray_end) return false;
  }
  const int K = 32;
  for (int k = 0; k <= K; ++k) {
    Complex p = a + (b - a) * (Real(k) / K);
    Real req = margin;
    if (relax_a) req = (std::min)(req, abs(p - a) * Real(Real(45) / 100));
    if (relax_b)
      req = (std::min)(req, abs(p - b) * Real(Real(45) / 100) + clear_b);
    if (cut_distance(p, cuts) < req && k != 0 && k != K) return false;
    Real obs_req = (std::min)(req, margin / 2);
    for (const Complex& o : cuts.obstacles)
      if (abs(p - o) < obs_req) return false;
  }
  // sampling can miss an obstacle sitting on a long leg; check them exactly
  for (const Complex& o : cuts.obstacles) {
    Real req = (std::min)(margin / 2, (std::min)(abs(o - a), abs(o - b)) * Real(Real(9) / 10));
    if (distance_point_segment(o, a, b) < req) return false;
  }
  return true;
}

// Dijkstra over a fixed waypoint set.  Node 0 is the base point (on the cut),
// the last node is the target.  Returns base, waypoints..., target.
inline std::vector<Complex> plan_g_path(const Complex& base, const Complex& target,
                                        const GCuts& cuts, const PrecisionCtx& ctx,
                                        bool leave_right = false) {
  ScopedPrecision scope(ctx);
  Real margin = Real(Real(5) / 100);
  std::vector<Complex> nodes;
  nodes.push_back(base);
  auto add = [&](double x, double y) { nodes.push_back(Complex(Real(x), Real(y))); };
  // lifts just off the base, ring far out, and detours around a₂ / b₂
  nodes.push_back(base + Complex(Real(Real(18) / 100), Real(Real(45) / 100)));
  nodes.push_back(base + Complex(Real(Real(18) / 100), -Real(Real(45) / 100)));
  add(3, 0.7);
  add(3, -0.7);
  add(1.2, 1.8);
  add(1.2, -1.8);
  add(0, 1.8);
  add(0, -1.8);
  add(-1.8, 1.2);
  add(-1.8, -1.2);
  if (!cuts.outline.empty()) {
    Complex a2 = cuts.outline.front(), b2 = cuts.outline.back();
    if (a2.im > b2.im) std::swap(a2, b2);  // a2 below
    nodes.push_back(a2 + Complex(Real(0), -Real(Real(8) / 10)));
    nodes.push_back(a2 + Complex(-Real(Real(8) / 10), Real(0)));
    nodes.push_back(b2 + Complex(Real(0), Real(Real(8) / 10)));
    nodes.push_back(b2 + Complex(-Real(Real(8) / 10), Real(0)));
  }
  // relief point for targets close to a cut: back off along the outward normal
  Real clear_t = cut_distance(target, cuts);
  if (clear_t < margin) {
    Complex best_foot = target;
    Real bd = dist_to_ray(target, cuts.ray_end);
    best_foot = (target.re <= cuts.ray_end) ? Complex(target.re) : Complex(cuts.ray_end);
    if (cuts.avoid_arc) {
      for (size_t i = 1; i < cuts.outline.size(); ++i) {
        Real d = distance_point_segment(target, cuts.outline[i - 1], cuts.outline[i]);
        if (d < bd) {
          bd = d;
          // project onto the segment
          Complex u = cuts.outline[i] - cuts.outline[i - 1];
          Complex w = target - cuts.outline[i - 1];
          Real t = (w.re * u.re + w.im * u.im) / (u.re * u.re + u.im * u.im);
          if (t < 0) t = 0;
          if (t > 1) t = 1;
          best_foot = cuts.outline[i - 1] + u * t;
        }
      }
    }
    Complex away = target - best_foot;
    Real na = abs(away);
    if (na > 0) nodes.push_back(target + away * (Real(Real(25) / 100) / na));
  }
  nodes.push_back(target);
  const size_t n = nodes.size();
  const size_t it = n - 1;

  auto edge_ok = [&](size_t i, size_t j) {
    bool ra = (i == 0), rb = (j == it);
    // A base sitting on an interior point of Δ₂ (a_* for g₃) is a boundary
    // point of three cut sectors; the defining path must leave into the
    // sector toward +∞, so the first leg has to head right.
    if (leave_right && i == 0 && !(nodes[j].re > base.re + Real(1) / 20)) return false;
    return leg_ok(nodes[i], nodes[j], cuts, margin, ra, rb,
                  rb ? (std::min)(clear_t, margin) : Real(0));
  };
  std::vector<Real> dist(n, Real(-1));
  std::vector<int> prev(n, -1);
  std::vector<bool> done(n, false);
  dist[0] = 0;
  for (size_t iter = 0; iter < n; ++iter) {
    size_t u = n;
    for (size_t k = 0; k < n; ++k)
      if (!done[k] && dist[k] >= Real(0) && (u == n || dist[k] < dist[u])) u = k;
    if (u == n || u == it) break;
    done[u] = true;
    for (size_t v = 0; v < n; ++v) {
      if (done[v] || v == 0) continue;
      if (!edge_ok(u, v)) continue;
      Real nd = dist[u] + abs(nodes[v] - nodes[u]) + Real(Real(2) / 10);
      if (dist[v] < Real(0) || nd < dist[v]) {
        dist[v] = nd;
        prev[v] = int(u);
      }
    }
  }
  if (dist[it] < Real(0))
    throw MeasureError("plan_g_path: no admissible path to target (point on a cut?)");
  std::vector<Complex> path;
  for (int k = int(it); k != -1; k = prev[k]) path.push_back(nodes[k]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Densities and masses.

// Density of μ_j with respect to the complex line element ds at an interior
// point s of Δ_j.  On the real cuts the boundary-value difference collapses
// to 2i·Im of the upper conjugate root, so the density is Im ξ₊ / π ≥ 0.
inline Complex density_mu(int j, const Complex& s, const SpectralCurveData& curve,
                          const SupportSet& sup, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Real ball = Real(1) / 10000;
  if (j == 1 || j == 3) {
    if (abs(s.im) > ctx.tol_eighth())
      throw MeasureError("density_mu: point off the real cut");
    Real x = s.re;
    const RealInterval* iv = nullptr;
    if (j == 1) iv = &sup.delta1;
    else if (sup.delta3) iv = &*sup.delta3;
    if (j == 3 && !sup.delta3) return Complex();  // μ₃ ≡ 0 below τ_c
    if (x <= iv->lo || x >= iv->hi) throw MeasureError("density_mu: point outside the cut");
    // the real-cut density is well conditioned arbitrarily close to the
    // endpoints; only an essentially-zero offset is rejected
    if (x - iv->lo < ctx.tol_eighth() || iv->hi - x < ctx.tol_eighth())
      throw MeasureError("density_mu: inside a branch-point ball");
    return Complex(detail::upper_root(curve, x, ctx).im / real_pi());
  }
  if (j != 2) throw MeasureError("density_mu: j must be 1, 2 or 3");
  // Δ₂: refine the carried branch values of the nearest polyline node at s.
  const ArcPolyline& arc = sup.delta2;
  size_t best = 0;
  Real bd = abs(s - arc.nodes[0]);
  for (size_t k = 1; k < arc.size(); ++k) {
    Real d = abs(s - arc.nodes[k]);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  if (abs(s - arc.nodes.front()) < ball || abs(s - arc.nodes.back()) < ball)
    throw MeasureError("density_mu: inside a branch-point ball");
  if (bd > Real(1) / 100) throw MeasureError("density_mu: point not on Delta_2");
  auto vals = xi_values_unlabeled(curve, s, ctx);
  const std::array<Complex, 3>& ref = arc.xi[best];
  std::array<Complex, 3> xi;
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  Real bc = Real(-1);
  for (const auto& p : perms) {
    Real cost = 0;
    for (int k = 0; k < 3; ++k) cost += abs(vals[p[k]] - ref[k]);
    if (bc < Real(0) || cost < bc) {
      bc = cost;
      xi = {vals[p[0]], vals[p[1]], vals[p[2]]};
    }
  }
  return (xi[0] - xi[2]) / (Real(2) * real_pi() * complex_i());
}

// Total masses.  |μ₁| and |μ₃| come from Gauss–Legendre with the sin
// substitution (the density vanishes like a square root at the endpoints);
// |μ₂| comes from the ∫ Q dz accumulated along the traced arc.
inline Masses masses(const SpectralCurveData& curve, const SupportSet& sup,
                     const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Real pi = real_pi();
  auto interval_mass = [&](const RealInterval& iv) -> Real {
    Real mid = (iv.lo + iv.hi) / 2, half = (iv.hi - iv.lo) / 2;
    auto f = [&](const Real& th) -> Complex {
      Real x = mid + half * sin(th);
      return Complex(detail::upper_root(curve, x, ctx).im * (half * cos(th)));
    };
    return integrate_adaptive(f, -pi / 2, pi / 2, ctx).re / pi;
  };
  Masses m{Real(0), Real(0), Real(0)};
  m.mu1 = interval_mass(sup.delta1);
  if (sup.delta3) m.mu3 = interval_mass(*sup.delta3);
  // |μ₂|: the polyline trapezoid sum is only good to ~10⁻⁷, so deform the
  // half-arc integral ∫_{a₂}^{a_*} (ξ₁ - ξ₃) dz onto a path to the right of
  // Δ₂ (the integrand is analytic between the two), which brings it back to
  // ordinary quadrature accuracy.  By conjugation symmetry the upper half
  // carries the same mass.
  {
    Complex a2 = curve.a2;
    Complex a_star(*curve.a_star);
    Complex P((a2.re + a_star.re) / 2 + Real(45) / 100, a2.im / 2);
    XiTriple t = xi_at(P, curve, ctx);
    detail::RootWalker w1, w3;
    w1.curve = &curve; w1.ctx = ctx; w1.seed(P, t.xi1);
    w3.curve = &curve; w3.ctx = ctx; w3.seed(P, t.xi3);
    auto leg = [&](const Complex& z0, const Complex& z1, bool sqrt_start) -> Complex {
      Complex span = z1 - z0;
      auto f = [&](const Real& t) -> Complex {
        Complex z = sqrt_start ? z0 + span * (t * t) : z0 + span * t;
        w1.walk_to(z);
        w3.walk_to(z);
        Complex q = w1.val - w3.val;
        return sqrt_start ? q * (2 * t) : q;
      };
      return integrate_adaptive(f, Real(0), Real(1), ctx) * span;
    };
    Complex half = leg(a2, P, true) + leg(P, a_star, false);
    m.mu2 = abs(half) / pi;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Discretized measures and their potentials.

struct QuadPiece {
  std::vector<Complex> nodes;
  std::vector<Complex> density;  // with respect to the complex line element
  std::vector<Real> mass;        // real nonnegative node masses
};

struct DiscretizedMeasure {
  std::vector<QuadPiece> pieces;
  Real total_mass;
  int sign = 1;  // −1 marks the subtracted half of a signed combination
};

// Quadrature discretization of μ_j.  Real cuts get n sin-substituted GL
// nodes; Δ₂ reuses the trace nodes with trapezoid weights from the carried Q.
inline DiscretizedMeasure discretize_mu(int j, const SpectralCurveData& curve,
                                        const SupportSet& sup, const PrecisionCtx& ctx,
                                        int n = 320) {
  ScopedPrecision scope(ctx);
  Real pi = real_pi();
  DiscretizedMeasure out;
  out.total_mass = 0;
  if (j == 1 || j == 3) {
    if (j == 3 && !sup.delta3) return out;
    const RealInterval& iv = (j == 1) ? sup.delta1 : *sup.delta3;
    const GLRule& rule = gl_rule(n, ctx);
    QuadPiece piece;
    Real mid = (iv.lo + iv.hi) / 2, half = (iv.hi - iv.lo) / 2;
    for (int k = 0; k < n; ++k) {
      Real th = rule.nodes[k] * (pi / 2);
      Real x = mid + half * sin(th);
      Real dens = detail::upper_root(curve, x, ctx).im / pi;
      Real w = rule.weights[k] * (pi / 2) * half * cos(th);
      piece.nodes.push_back(Complex(x));
      piece.density.push_back(Complex(dens));
      piece.mass.push_back(dens * w);
      out.total_mass += piece.mass.back();
    }
    out.pieces.push_back(std::move(piece));
    return out;
  }
  if (j != 2) throw MeasureError("discretize_mu: j must be 1, 2 or 3");
  const ArcPolyline& arc = sup.delta2;
  QuadPiece piece;
  piece.nodes = arc.nodes;
  piece.density.resize(arc.size());
  piece.mass.assign(arc.size(), Real(0));
  Complex i2pi = Real(2) * pi * complex_i();
  for (size_t k = 0; k < arc.size(); ++k) piece.density[k] = arc.q_values[k] / i2pi;
  // trapezoid mass per segment, split onto the two incident nodes
  Real total = 0;
  for (size_t k = 1; k < arc.size(); ++k) {
    Complex dz = arc.nodes[k] - arc.nodes[k - 1];
    Complex dm = (piece.density[k - 1] + piece.density[k]) * dz / Real(2);
    total += dm.re;
  }
  int sgn = total >= 0 ? 1 : -1;
  for (size_t k = 1; k < arc.size(); ++k) {
    Complex dz = arc.nodes[k] - arc.nodes[k - 1];
    Complex dm = (piece.density[k - 1] + piece.density[k]) * dz / Real(2);
    Real m = dm.re * sgn;
    piece.mass[k - 1] += m / 2;
    piece.mass[k] += m / 2;
  }
  out.total_mass = total * sgn;
  out.pieces.push_back(std::move(piece));
  return out;
}

// Logarithmic potential U^μ(z) = ∫ log 1/|s−z| dμ(s).
inline Real potential_U(const DiscretizedMeasure& mu, const Complex& z, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Real acc = 0;
  for (const QuadPiece& p : mu.pieces)
    for (size_t k = 0; k < p.nodes.size(); ++k) acc -= p.mass[k] * log(abs(z - p.nodes[k]));
  return mu.sign * acc;
}

// Cauchy transform C^μ(z) = ∫ dμ(s)/(s−z).
inline Complex cauchy_C(const DiscretizedMeasure& mu, const Complex& z, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  Complex acc;
  for (const QuadPiece& p : mu.pieces)
    for (size_t k = 0; k < p.nodes.size(); ++k) {
      Complex d = p.nodes[k] - z;
      acc = acc + Complex(p.mass[k]) / d;
    }
  return acc * Real(mu.sign);
}

// ---------------------------------------------------------------------------
// g-functions.

class GFunctionSet {
 public:
  GFunctionSet(const SpectralCurveData& curve, const SupportSet& sup, const PrecisionCtx& ctx)
      : curve_(curve), sup_(sup), ctx_(ctx) {
    ScopedPrecision scope(ctx_);
    if (!curve_.delta2) throw MeasureError("GFunctionSet: geometry not attached");
    mass_ = mopslab::masses(curve_, sup_, ctx_);
    c1_ = -real_pi() * complex_i() * mass_.mu2;
    // decimated Δ₂ outline for planning
    const ArcPolyline& arc = sup_.delta2;
    size_t stride = (std::max)(size_t(1), arc.size() / 240);
    for (size_t k = 0; k < arc.size(); k += stride) outline_.push_back(arc.nodes[k]);
    if (outline_.back() != arc.nodes.back()) outline_.push_back(arc.nodes.back());
    obstacles_ = {Complex(curve_.a1), Complex(curve_.b1), curve_.a2, curve_.b2,
                  Complex(curve_.b_star)};
    c3_ = compute_c3();
  }

  const SpectralCurveData& curve() const { return curve_; }
  const SupportSet& supports() const { return sup_; }
  const PrecisionCtx& ctx() const { return ctx_; }
  const Masses& mass() const { return mass_; }
  Complex c(int j) const { return j == 3 ? c3_ : c1_; }

  // g_j(z); memoized (first writer wins, values immutable).
  Complex g(int j, const Complex& z) const {
    if (j < 1 || j > 3) throw MeasureError("g: j must be 1, 2 or 3");
    std::pair<int, std::pair<std::string, std::string>> key{j, {z.re.str(), z.im.str()}};
    {
      std::lock_guard<std::mutex> lock(memo_mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    Complex val = eval_g(j, z);
    std::lock_guard<std::mutex> lock(memo_mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    memo_.emplace(std::move(key), val);
    return val;
  }

  // r_j = lim (g_j − leading cubic ± mass·log z), via Richardson over
  // evaluations at |z| ∈ {10³, 2·10³, 4·10³} on the positive real axis.
  Real r(int j) const {
    if (!r_[j - 1]) r_[j - 1] = r(j, Real(1000));
    return *r_[j - 1];
  }

  // Same limit extrapolated from |z| ∈ {X, 2X, 4X}; the explicit radius lets
  // the stability of the tail be probed.
  Real r(int j, const Real& X) const {
    ScopedPrecision scope(ctx_);
    // g_j - c_j is the Schwarz-symmetric branch, real on the positive axis
    // beyond the supports; its expansion constant is the real r_j (the
    // purely imaginary c_j would otherwise leak into the limit).
    //
    // Past the last real discriminant zero (the node b_*) the three roots
    // are real and never collide, so sorting labels them exactly: ξ₁ is the
    // largest and ξ₂ the smallest (their gap (1-2α)/x keeps that order out
    // to infinity).  Tracking the ξ₂/ξ₃ pair out to |z| ~ 10³ is hopeless
    // anyway — their separation is ~10⁻¹⁰ relative to the values.
    Real x0 = curve_.b_star + Real(1) / 2;
    Complex g0 = g(j, Complex(x0)) - c(j);
    auto xi_sorted = [&](const Real& x) -> Complex {
      auto vals = xi_values_unlabeled(curve_, Complex(x), ctx_);
      std::array<Real, 3> re{vals[0].re, vals[1].re, vals[2].re};
      std::sort(re.begin(), re.end());
      return Complex(j == 1 ? re[2] : (j == 2 ? re[0] : re[1]));
    };
    auto tail = [&](const Real& x) -> Complex {
      Complex v = g0 + integrate_adaptive(xi_sorted, x0, x, ctx_);
      Complex z(x);
      if (j == 1) return v - Real(2) / 3 * z * z * z + log(x);
      Real lg = (j == 2) ? curve_.alpha : (1 - curve_.alpha);
      return v + z * z * z / Real(3) - lg * log(x);
    };
    Complex f1 = tail(X), f2 = tail(2 * X), f4 = tail(4 * X);
    Complex e1 = f2 * Real(2) - f1, e2 = f4 * Real(2) - f2;
    Complex rr = (e2 * Real(4) - e1) / Real(3);
    if (abs(rr.im) > pow(Real(10), -8))
      throw MeasureError("r_constants: nonreal limit (extrapolation failed)");
    return rr.re;
  }

  // Constant appearing in Φ₃ below τ_c: ∫_{a_*}^{a₁} (ξ₁−ξ₂) ds + c₂ on the
  // real segment (a_*, a₁) where all three branches are real and ordered.
  Complex phi3_extra() const {
    ScopedPrecision scope(ctx_);
    if (curve_.regime != Regime::Subcritical) return Complex();
    if (!phi3_extra_) {
      Real a_star = *curve_.a_star;
      auto f = [&](const Real& x) -> Complex {
        auto vals = xi_values_unlabeled(curve_, Complex(x), ctx_);
        std::array<Real, 3> re{vals[0].re, vals[1].re, vals[2].re};
        std::sort(re.begin(), re.end());
        return Complex(re[0] - re[1]);
      };
      Complex integral = integrate_sqrt_endpoint(f, a_star, curve_.a1, false, ctx_);
      phi3_extra_ = integral + c1_;
    }
    return *phi3_extra_;
  }

 private:
  detail::GCuts cuts_for(int j) const {
    detail::GCuts cuts;
    cuts.ray_end = (j == 3) ? *curve_.a_star : curve_.b1;
    cuts.avoid_arc = (j != 2);
    if (cuts.avoid_arc) cuts.outline = outline_;
    cuts.obstacles = obstacles_;
    return cuts;
  }

  Complex eval_g(int j, const Complex& z) const {
    ScopedPrecision scope(ctx_);
    Complex base = (j == 3) ? Complex(*curve_.a_star) : Complex(curve_.b1);
    detail::GCuts cuts = cuts_for(j);
    // A target close to a square-root branch point must be approached along
    // the ray from that branch point: on a radial leg arg(z - b) is constant,
    // so the colliding root pair never rotates and tracking stays stable.  A
    // generic approach can sweep past the branch point closer than the target
    // itself and silently hop sheets.
    Complex b_near(curve_.a1);
    Real bd = abs(z - b_near);
    for (const Complex& b : {Complex(curve_.b1), curve_.a2, curve_.b2}) {
      Real d = abs(z - b);
      if (d < bd) { bd = d; b_near = b; }
    }
    std::optional<Complex> radial_from;
    Complex target = z;
    if (bd < Real(1) / 20) {
      if (bd == 0) throw MeasureError("g evaluation exactly at a branch point");
      radial_from = b_near + (z - b_near) * (Real(1) / 10 / bd);
      target = *radial_from;
    }
    std::vector<Complex> path = detail::plan_g_path(base, target, cuts, ctx_, /*leave_right=*/j == 3);
    // label at the first waypoint off the base, then walk leg by leg; the
    // base of g₁/g₂ is the branch point b₁ where ξ₁, ξ₂ go like a square root
    detail::RootWalker w;
    w.curve = &curve_;
    w.ctx = ctx_;
    XiTriple t = xi_at(path[1], curve_, ctx_);
    w.seed(path[1], t[j - 1]);
    Complex acc = detail::integrate_tracked_leg(
        w, base, path[1], ctx_,
        j == 3 ? detail::LegMode::Plain : detail::LegMode::SqrtStart);
    for (size_t k = 2; k < path.size(); ++k)
      acc = acc + detail::integrate_tracked_leg(w, path[k - 1], path[k], ctx_);
    if (radial_from)
      acc = acc + detail::integrate_tracked_leg(w, *radial_from, z, ctx_,
                                                detail::LegMode::SqrtEnd);
    return acc + c(j);
  }

  Complex compute_c3() const {
    ScopedPrecision scope(ctx_);
    // c₃ = −∫_{a_*}^{b₁} ξ₁₋ ds.  ξ₁₋ is the limit of ξ₁ from the lower half
    // plane, so the segment can be deformed into H₋ (no branch points between
    // the segment and the dip; Δ₂ leaves a_* vertically and curves away to
    // the left).  Only b₁ is a branch point of ξ₁ on this path.
    Real a_star = *curve_.a_star;
    Complex p1(a_star + Real(Real(15) / 100), -Real(Real(25) / 100));
    Complex p2(curve_.b1 - Real(Real(10) / 100), -Real(Real(25) / 100));
    detail::RootWalker w;
    w.curve = &curve_;
    w.ctx = ctx_;
    XiTriple t = xi_at(p1, curve_, ctx_);
    w.seed(p1, t[0]);
    Complex acc = detail::integrate_tracked_leg(w, Complex(a_star), p1, ctx_);
    acc = acc + detail::integrate_tracked_leg(w, p1, p2, ctx_);
    acc = acc + detail::integrate_tracked_leg(w, p2, Complex(curve_.b1), ctx_,
                                              detail::LegMode::SqrtEnd);
    return -acc;
  }

  SpectralCurveData curve_;
  SupportSet sup_;
  PrecisionCtx ctx_;
  Masses mass_;
  Complex c1_, c3_;
  std::vector<Complex> outline_;
  std::vector<Complex> obstacles_;
  mutable std::optional<Real> r_[3];
  mutable std::optional<Complex> phi3_extra_;
  mutable std::map<std::pair<int, std::pair<std::string, std::string>>, Complex> memo_;
  mutable std::mutex memo_mu_;
};

// Convenience wrappers matching the operation names used elsewhere.
inline Complex g_function(const Complex& z, int j, const GFunctionSet& gset) {
  return gset.g(j, z);
}

inline std::array<Real, 3> r_constants(const GFunctionSet& gset) {
  return {gset.r(1), gset.r(2), gset.r(3)};
}

// Φ_j via the g-identities:
//   Φ₁ = g₁ − g₂,  Φ₂ = g₁ − g₃ + 2πi,
//   Φ₃ = g₃ − g₂ − 2πiα  (+ ∫_{a_*}^{a₁}(ξ₁−ξ₂)ds + c₂ below τ_c).
inline Complex phi_function(const Complex& z, int j, const GFunctionSet& gset) {
  ScopedPrecision scope(gset.ctx());
  Complex i2pi = Real(2) * real_pi() * complex_i();
  if (j == 1) return gset.g(1, z) - gset.g(2, z);
  if (j == 2) return gset.g(1, z) - gset.g(3, z) + i2pi;
  if (j != 3) throw MeasureError("phi_function: j must be 1, 2 or 3");
  return gset.g(3, z) - gset.g(2, z) - i2pi * gset.curve().alpha + gset.phi3_extra();
}

}  // namespace mopslab
