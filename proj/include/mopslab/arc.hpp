#pragma once

#include "mopslab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

enum class EndpointKind { None, BranchPoint, RealAxisCrossing, Junction, Cap };

inline const char* to_string(EndpointKind k) {
  switch (k) {
    case EndpointKind::BranchPoint: return "branch_point";
    case EndpointKind::RealAxisCrossing: return "real_axis_crossing";
    case EndpointKind::Junction: return "junction";
    case EndpointKind::Cap: return "cap";
    default: return "none";
  }
}

// Piecewise-linear arc with the data the tracer accumulates along it: the
// local Q value, the running ∫ Q ds, and the continued xi triple.
struct ArcPolyline {
  std::vector<Complex> nodes;
  std::vector<Complex> q_values;               // Q at each node (may be empty)
  std::vector<Complex> cum_q;                  // ∫ Q ds from nodes[0] (may be empty)
  std::vector<std::array<Complex, 3>> xi;      // continued (ξ₁,ξ₂,ξ₃) (may be empty)
  std::string branch_pair;                     // e.g. "xi2-xi3"
  bool oriented_forward = true;
  EndpointKind start_kind = EndpointKind::None;
  EndpointKind end_kind = EndpointKind::None;

  size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  const Complex& front() const { return nodes.front(); }
  const Complex& back() const { return nodes.back(); }

  Real arclength() const {
    Real s = 0;
    for (size_t i = 1; i < nodes.size(); ++i) s += abs(nodes[i] - nodes[i - 1]);
    return s;
  }

  // Reflection across the real axis with reversed orientation; carried data
  // is reflected consistently (Q and ξ conjugate, ∫Q ds re-accumulated).
  ArcPolyline conjugate_mirror() const {
    ArcPolyline m;
    m.branch_pair = branch_pair;
    m.oriented_forward = oriented_forward;
    m.start_kind = end_kind;
    m.end_kind = start_kind;
    size_t n = nodes.size();
    m.nodes.resize(n);
    for (size_t i = 0; i < n; ++i) m.nodes[i] = conj(nodes[n - 1 - i]);
    if (!q_values.empty()) {
      m.q_values.resize(n);
      for (size_t i = 0; i < n; ++i) m.q_values[i] = conj(q_values[n - 1 - i]);
    }
    if (!xi.empty()) {
      m.xi.resize(n);
      for (size_t i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) m.xi[i][j] = conj(xi[n - 1 - i][j]);
    }
    if (!cum_q.empty()) {
      m.cum_q.resize(n);
      Complex total = cum_q.back();
      for (size_t i = 0; i < n; ++i) m.cum_q[i] = conj(total - cum_q[n - 1 - i]);
    }
    return m;
  }

  // Appends `other` (assumed to start where this ends); carried data joined.
  void append(const ArcPolyline& other) {
    if (nodes.empty()) { *this = other; return; }
    Complex q_off = cum_q.empty() ? Complex() : cum_q.back();
    for (size_t i = 1; i < other.nodes.size(); ++i) {
      nodes.push_back(other.nodes[i]);
      if (!other.q_values.empty() && !q_values.empty()) q_values.push_back(other.q_values[i]);
      if (!other.xi.empty() && !xi.empty()) xi.push_back(other.xi[i]);
      if (!other.cum_q.empty() && !cum_q.empty()) cum_q.push_back(q_off + other.cum_q[i]);
    }
    end_kind = other.end_kind;
  }
};

inline Real distance_point_segment(const Complex& p, const Complex& a, const Complex& b) {
  Complex d = b - a;
  Real len2 = norm_sq(d);
  if (len2 == 0) return abs(p - a);
  Real t = ((p.re - a.re) * d.re + (p.im - a.im) * d.im) / len2;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  return abs(p - (a + d * t));
}

inline Real distance_point_polyline(const Complex& p, const ArcPolyline& arc) {
  if (arc.nodes.empty()) throw std::invalid_argument("distance_point_polyline: empty arc");
  if (arc.nodes.size() == 1) return abs(p - arc.nodes[0]);
  Real best = -1;
  for (size_t i = 1; i < arc.nodes.size(); ++i) {
    Real d = distance_point_segment(p, arc.nodes[i - 1], arc.nodes[i]);
    if (best < 0 || d < best) best = d;
  }
  return best;
}

inline Real distance_point_real_interval(const Complex& p, const Real& lo, const Real& hi) {
  Real x = p.re;
  if (x < lo) x = lo;
  if (x > hi) x = hi;
  return abs(p - Complex(x));
}

// ∫ f(z) dz along the polyline (sum of straight segments).
template <typename F>
Complex adaptive_quadrature(F&& f, const ArcPolyline& path, const PrecisionCtx& ctx,
                            Real tol = Real(0)) {
  Complex total;
  for (size_t i = 1; i < path.nodes.size(); ++i)
    total += integrate_segment(f, path.nodes[i - 1], path.nodes[i], ctx, tol);
  return total;
}

struct Segment {
  Complex a, b;
};

template <typename F>
Complex adaptive_quadrature(F&& f, const Segment& seg, const PrecisionCtx& ctx,
                            Real tol = Real(0)) {
  return integrate_segment(f, seg.a, seg.b, ctx, tol);
}

// Intersection of segment p0->p1 with q0->q1; returns parameter t on p in [0,1].
inline std::optional<Real> segment_intersection_t(const Complex& p0, const Complex& p1,
                                                  const Complex& q0, const Complex& q1) {
  Complex r = p1 - p0, s = q1 - q0;
  Real denom = r.re * s.im - r.im * s.re;
  if (denom == 0) return std::nullopt;
  Complex w = q0 - p0;
  Real t = (w.re * s.im - w.im * s.re) / denom;
  Real u = (w.re * r.im - w.im * r.re) / denom;
  if (t < 0 || t > 1 || u < 0 || u > 1) return std::nullopt;
  return t;
}

struct PolylineHit {
  Real t;          // parameter along the query segment
  size_t seg_idx;  // index i: polyline segment nodes[i] -> nodes[i+1]
  Real u;          // parameter along that polyline segment
  Complex point;
};

// First intersection of segment p0->p1 with the polyline, skipping polyline
// segments within skip_radius of skip_point (to avoid self-hits near a
// shared endpoint).
inline std::optional<PolylineHit> first_intersection(const Complex& p0, const Complex& p1,
                                                     const ArcPolyline& arc,
                                                     const Complex* skip_point = nullptr,
                                                     Real skip_radius = Real(0)) {
  std::optional<PolylineHit> best;
  for (size_t i = 0; i + 1 < arc.nodes.size(); ++i) {
    const Complex& q0 = arc.nodes[i];
    const Complex& q1 = arc.nodes[i + 1];
    if (skip_point &&
        distance_point_segment(*skip_point, q0, q1) < skip_radius)
      continue;
    auto t = segment_intersection_t(p0, p1, q0, q1);
    if (!t) continue;
    if (!best || *t < best->t) {
      Complex r = p1 - p0, s = q1 - q0;
      Real denom = r.re * s.im - r.im * s.re;
      Complex w = q0 - p0;
      Real u = (w.re * r.im - w.im * r.re) / denom;
      best = PolylineHit{*t, i, u, p0 + r * (*t)};
    }
  }
  return best;
}

}  // namespace mopslab
