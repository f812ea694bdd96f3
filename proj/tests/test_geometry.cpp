#include <catch2/catch_amalgamated.hpp>

#include <mopslab/geometry.hpp>

using namespace mopslab;

namespace {
const PrecisionCtx ctx64(64);
}

TEST_CASE("branch_local Puiseux data at a2") {
  ScopedPrecision scope(ctx64);
  SpectralCurveData cv = make_curve(Real("0.2"), ctx64);
  BranchLocal loc = branch_local(cv, cv.a2, ctx64);

  // the three critical directions are 2π/3 apart and unit length
  for (int k = 0; k < 3; ++k) {
    CHECK(abs(abs(loc.dirs[k]) - 1) < ctx64.tol_half());
    Complex ratio = loc.dirs[(k + 1) % 3] / loc.dirs[k];
    CHECK(abs(ratio - polar(Real(1), 2 * real_pi() / 3)) < ctx64.tol_half());
  }

  // ξ = ξ_* ± β√(z−a₂) + O(z−a₂): at distance h the colliding pair should
  // satisfy (ξ − ξ_*)² ≈ β²(z−a₂) with O(h^{3/2}) error
  Real h = pow(Real(10), -6);
  Complex z = cv.a2 + Complex(h, h / 3);
  auto vals = xi_values_unlabeled(cv, z, ctx64);
  Complex target = loc.beta * loc.beta * (z - cv.a2);
  int hits = 0;
  for (int i = 0; i < 3; ++i) {
    Complex d = vals[i] - loc.xi_star;
    if (abs(d * d - target) < pow(h, Real(3) / 2) * 100) ++hits;
  }
  CHECK(hits == 2);
}

TEST_CASE("support_delta2 subcritical geometry (alpha=0.2)") {
  ScopedPrecision scope(ctx64);
  SpectralCurveData cv = make_curve(Real("0.2"), ctx64);
  Delta2Trace d2 = support_delta2(cv, ctx64);

  // endpoints are the complex branch points, oriented a2 -> b2
  CHECK(abs(d2.arc.front() - cv.a2) < pow(Real(10), -3));
  CHECK(abs(d2.arc.back() - cv.b2) < pow(Real(10), -3));
  CHECK(d2.arc.start_kind == EndpointKind::BranchPoint);
  CHECK(d2.arc.end_kind == EndpointKind::BranchPoint);

  // the crossing sits left of Delta_1 in the subcritical regime
  CHECK(d2.a_star < cv.a1);

  // trajectory invariant per node
  Real worst = 0;
  for (const Complex& w : d2.arc.cum_q)
    if (abs(w.re) > worst) worst = abs(w.re);
  CHECK(worst < ctx64.tol_eighth());

  // conjugation symmetry: the mirror is the same point set
  ArcPolyline m = d2.arc.conjugate_mirror();
  Real sym = 0;
  for (size_t i = 0; i < d2.arc.size(); i += 25) {
    Real d = distance_point_polyline(d2.arc.nodes[i], m);
    if (d > sym) sym = d;
  }
  CHECK(sym < ctx64.tol_eighth());

  // per-node branch values stay on the curve, and Q is nonvanishing on the
  // interior of the arc
  REQUIRE(d2.arc.xi.size() == d2.arc.size());
  for (size_t i = d2.arc.size() / 4; i + 1 < d2.arc.size(); i += d2.arc.size() / 4) {
    const Complex& z = d2.arc.nodes[i];
    Complex rz = cv.R_at(z), dz = cv.D_at(z);
    for (int k = 0; k < 3; ++k) {
      const Complex& xi = d2.arc.xi[i][k];
      CHECK(abs(xi * xi * xi - rz * xi + dz) < ctx64.tol_half() * 100);
    }
    CHECK(abs(d2.arc.q_values[i]) > Real(1) / 1000);
  }
}

TEST_CASE("support_delta2 crossing location across regimes") {
  ScopedPrecision scope(ctx64);
  // alpha ~ 0.14786: subcritical, Delta_2 crosses left of Delta_1
  {
    SpectralCurveData cv = make_curve(Real("0.14786"), ctx64);
    Delta2Trace d2 = support_delta2(cv, ctx64);
    CHECK(d2.a_star < cv.a1);
  }
  // alpha ~ 0.348342: a_* splits (a1, b1) into Delta_3 | Delta_1
  {
    SpectralCurveData cv = make_curve(Real("0.348342"), ctx64);
    Delta2Trace d2 = support_delta2(cv, ctx64);
    CHECK(d2.a_star > cv.a1);
    CHECK(d2.a_star < cv.b1);
  }
}

TEST_CASE("compute_supports assembles the regime-dependent intervals") {
  ScopedPrecision scope(ctx64);
  {
    SpectralCurveData cv = make_curve(Real("0.2"), ctx64);
    SupportSet ss = compute_supports(cv, ctx64);
    CHECK_FALSE(ss.delta3.has_value());
    CHECK(abs(ss.delta1.lo - cv.a1) < ctx64.tol_eighth());
    CHECK(abs(ss.delta1.hi - cv.b1) < ctx64.tol_eighth());
  }
  {
    SpectralCurveData cv = make_curve(Real("0.38"), ctx64);
    SupportSet ss = compute_supports(cv, ctx64);
    REQUIRE(ss.delta3.has_value());
    CHECK(abs(ss.delta3->lo - cv.a1) < ctx64.tol_eighth());
    CHECK(abs(ss.delta3->hi - ss.a_star) < ctx64.tol_eighth());
    CHECK(abs(ss.delta1.lo - ss.a_star) < ctx64.tol_eighth());
    CHECK(abs(ss.delta1.hi - cv.b1) < ctx64.tol_eighth());
  }
}

TEST_CASE("interior labeling works once geometry is attached") {
  ScopedPrecision scope(ctx64);
  SpectralCurveData cv = make_curve(Real("0.2"), ctx64);
  attach_geometry(cv, ctx64);
  for (const Complex& z : {Complex(Real(0), Real(2)), Complex(Real("0.5"), Real("-1.5")),
                           Complex(Real("-2"), Real("0.7"))}) {
    XiTriple t = xi_at(z, cv, ctx64);
    CHECK(xi_symmetric_residual(t, cv) < ctx64.tol_half() * 1000);
    XiTriple tc = xi_at(conj(z), cv, ctx64);
    CHECK(abs(tc.xi1 - conj(t.xi1)) < ctx64.tol_quarter());
    CHECK(abs(tc.xi2 - conj(t.xi2)) < ctx64.tol_quarter());
    CHECK(abs(tc.xi3 - conj(t.xi3)) < ctx64.tol_quarter());
  }
}

TEST_CASE("trajectory_field basics") {
  ScopedPrecision scope(ctx64);
  SpectralCurveData cv = make_curve(Real("0.2"), ctx64);
  attach_geometry(cv, ctx64);

  // at large real x > b1, Q = xi1 - xi2 ~ 3x^2 so the field is vertical
  Complex f = trajectory_field(Complex(Real(6)), 1, 2, cv, ctx64);
  CHECK(abs(f.re) < Real(1) / 100);
  CHECK(abs(abs(f) - 1) < ctx64.tol_half());

  // conjugation: field(conj z) = -conj(field(z)) up to orientation sign
  Complex z(Real("0.4"), Real("1.2"));
  Complex fu = trajectory_field(z, 1, 2, cv, ctx64);
  Complex fl = trajectory_field(conj(z), 1, 2, cv, ctx64);
  Complex g = -conj(fu);
  CHECK((abs(fl - g) < ctx64.tol_quarter() || abs(fl + g) < ctx64.tol_quarter()));
}

TEST_CASE("transition event probes straddle the pinned constants") {
  ScopedPrecision scope(ctx64);
  CHECK(transition_event_probe(Real("0.09"), TransitionEvent::Tau1, ctx64) < 0);
  CHECK(transition_event_probe(Real("0.19"), TransitionEvent::Tau1, ctx64) > 0);
  CHECK(transition_event_probe(Real("0.18"), TransitionEvent::TauC, ctx64) < 0);
  CHECK(transition_event_probe(Real("0.20"), TransitionEvent::TauC, ctx64) > 0);
  CHECK(transition_event_probe(Real("0.22"), TransitionEvent::Tau2, ctx64) > 0);
  CHECK(transition_event_probe(Real("0.235"), TransitionEvent::Tau2, ctx64) < 0);
}

TEST_CASE("a_star side agrees with the alpha classification") {
  ScopedPrecision scope(ctx64);
  TransitionConstants tc = pinned_transitions();
  for (const char* a : {"0.12", "0.2", "0.24", "0.27", "0.31", "0.36", "0.41"}) {
    Real alpha(a);
    SpectralCurveData cv = make_curve(alpha, ctx64);
    Delta2Trace d2 = support_delta2(cv, ctx64);
    CHECK((d2.a_star < cv.a1) == (alpha < tc.alpha_c));
  }
}

TEST_CASE("hausdorff_to_support") {
  ScopedPrecision scope(ctx64);
  ArcPolyline arc;
  arc.nodes = {Complex(Real(0)), Complex(Real(1)), Complex(Real(1), Real(1))};
  SupportTargets tgt;
  tgt.arcs.push_back(&arc);
  tgt.intervals.push_back(RealInterval{Real(3), Real(4)});

  // points on the polyline nodes -> 0
  CHECK(hausdorff_to_support(arc.nodes, tgt, ctx64) == 0);
  // single point at distance d from a segment -> d
  std::vector<Complex> pts{Complex(Real("0.5"), Real("0.25"))};
  CHECK(abs(hausdorff_to_support(pts, tgt, ctx64) - Real("0.25")) < ctx64.tol_half());
  // interval piece wins when closer
  pts[0] = Complex(Real("3.5"), Real("0.1"));
  CHECK(abs(hausdorff_to_support(pts, tgt, ctx64) - Real("0.1")) < ctx64.tol_half());
  // empty inputs are an error
  CHECK_THROWS_AS(hausdorff_to_support({}, tgt, ctx64), std::invalid_argument);
}
