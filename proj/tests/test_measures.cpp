#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <memory>
#include <string>

#include <mopslab/measures.hpp>

using namespace mopslab;

namespace {

const PrecisionCtx ctx64(64);

struct MeasureFixture {
  SpectralCurveData curve;
  SupportSet sup;
  std::unique_ptr<GFunctionSet> gs;
};

// Curve + supports + g-functions are expensive to assemble; share them across
// test cases (Catch2 runs every case in one process).
const MeasureFixture& fixture(const std::string& alpha) {
  static std::map<std::string, std::unique_ptr<MeasureFixture>> cache;
  auto& slot = cache[alpha];
  if (!slot) {
    ScopedPrecision scope(ctx64);
    slot = std::make_unique<MeasureFixture>();
    slot->curve = make_curve(Real(alpha), ctx64);
    slot->sup = compute_supports(slot->curve, ctx64);
    slot->gs = std::make_unique<GFunctionSet>(slot->curve, slot->sup, ctx64);
  }
  return *slot;
}

Real tol8() { return pow(Real(10), -8); }

// ∮ ξ_{label} along the closed polygon (counterclockwise corner list), with
// branch tracking.  Returns the loop integral and checks that the tracked
// root returns to its start value (trivial monodromy of the contour).
Complex loop_integral(const SpectralCurveData& cv, int label,
                      const std::vector<Complex>& corners) {
  detail::RootWalker w;
  w.curve = &cv;
  w.ctx = ctx64;
  XiTriple t = xi_at(corners[0], cv, ctx64);
  w.seed(corners[0], t[label - 1]);
  Complex v0 = w.val;
  Complex acc;
  for (size_t k = 0; k < corners.size(); ++k) {
    const Complex& a = corners[k];
    const Complex& b = corners[(k + 1) % corners.size()];
    acc = acc + detail::integrate_tracked_leg(w, a, b, ctx64);
  }
  CHECK(abs(w.val - v0) < ctx64.tol_quarter());  // closed loop, no monodromy
  return acc;
}

// Direct ∫ (ξ_p − ξ_q) from `base` to z along base → (waypoints…) → z, with
// both branches tracked; `sqrt_base` marks a square-root collision of the
// pair at the base.  Walkers are seeded at the far end of the first leg, so
// the first waypoint (or z itself) must be a point where xi_at labels hold.
Complex direct_pair_integral(const SpectralCurveData& cv, int p, int q, const Complex& base,
                             const std::vector<Complex>& waypoints, const Complex& z,
                             bool sqrt_base) {
  std::vector<Complex> path = waypoints;
  path.push_back(z);
  detail::RootWalker wp, wq;
  wp.curve = &cv;
  wp.ctx = ctx64;
  wq.curve = &cv;
  wq.ctx = ctx64;
  XiTriple t = xi_at(path[0], cv, ctx64);
  wp.seed(path[0], t[p - 1]);
  wq.seed(path[0], t[q - 1]);
  Complex acc;
  Complex from = base;
  for (size_t k = 0; k < path.size(); ++k) {
    Complex span = path[k] - from;
    bool sq = (k == 0) && sqrt_base;
    auto f = [&](const Real& s) -> Complex {
      Complex zz = sq ? from + span * (s * s) : from + span * s;
      wp.walk_to(zz);
      wq.walk_to(zz);
      Complex d = wp.val - wq.val;
      return sq ? d * (2 * s) : d;
    };
    acc = acc + integrate_adaptive(f, Real(0), Real(1), ctx64) * span;
    from = path[k];
  }
  return acc;
}

// |d mod 2πi|: the g-branches fix Φ only up to 2πi, so comparisons against
// direct integrals are taken on the exp(Φ) level.
Real mod_2pi_i(const Complex& d) {
  Real twopi = 2 * real_pi();
  Real k = round(d.im / twopi);
  return abs(d - Complex(Real(0), k * twopi));
}

}  // namespace

TEST_CASE("masses satisfy the constraint equations") {
  ScopedPrecision scope(ctx64);
  for (const char* a : {"0.15", "0.2", "0.3", "0.38"}) {
    INFO("alpha = " << a);
    const MeasureFixture& fx = fixture(a);
    const Masses& m = fx.gs->mass();
    Real alpha = fx.curve.alpha;
    CHECK(abs(m.mu1 + m.mu2 - 1) < tol8());
    CHECK(abs(m.mu1 + m.mu3 - alpha) < tol8());
    CHECK(abs(m.mu2 - m.mu3 - (1 - alpha)) < tol8());
    CHECK(m.mu1 > 0);
    CHECK(m.mu2 > 0);
    if (fx.curve.regime == Regime::Subcritical) {
      CHECK(m.mu3 == 0);
    } else {
      CHECK(m.mu3 > 0);
    }
  }
}

TEST_CASE("densities are positive with square-root edges") {
  ScopedPrecision scope(ctx64);
  const MeasureFixture& fx = fixture("0.2");

  // μ₁ on the interior of Δ₁
  const RealInterval& d1 = fx.sup.delta1;
  for (int k = 1; k <= 20; ++k) {
    Real x = d1.lo + (d1.hi - d1.lo) * k / 21;
    Complex dens = density_mu(1, Complex(x), fx.curve, fx.sup, ctx64);
    CHECK(dens.re > 0);
    CHECK(abs(dens.im) <= dens.re * pow(Real(10), -6));
  }

  // square-root vanishing at b₁: log-log slope over offsets 10⁻³ … 10⁻⁶
  {
    Real d3 = log(density_mu(1, Complex(d1.hi - pow(Real(10), -3)), fx.curve, fx.sup, ctx64).re);
    Real d6 = log(density_mu(1, Complex(d1.hi - pow(Real(10), -6)), fx.curve, fx.sup, ctx64).re);
    Real slope = (d6 - d3) / (log(pow(Real(10), -6)) - log(pow(Real(10), -3)));
    CHECK(abs(slope - Real(1) / 2) < Real(5) / 100);
  }
  // same at a₁
  {
    Real d3 = log(density_mu(1, Complex(d1.lo + pow(Real(10), -3)), fx.curve, fx.sup, ctx64).re);
    Real d6 = log(density_mu(1, Complex(d1.lo + pow(Real(10), -6)), fx.curve, fx.sup, ctx64).re);
    Real slope = (d6 - d3) / (log(pow(Real(10), -6)) - log(pow(Real(10), -3)));
    CHECK(abs(slope - Real(1) / 2) < Real(5) / 100);
  }

  // μ₂ on Δ₂: density times the unit tangent is real and positive
  const ArcPolyline& arc = fx.sup.delta2;
  for (size_t frac = 1; frac <= 7; frac += 2) {
    size_t k = arc.size() * frac / 8;
    Complex tang = arc.nodes[k + 1] - arc.nodes[k - 1];
    tang = tang / abs(tang);
    Complex lin = density_mu(2, arc.nodes[k], fx.curve, fx.sup, ctx64) * tang;
    CHECK(lin.re > 0);
    CHECK(abs(lin.im) <= lin.re * pow(Real(10), -6));
  }

  // μ₃ is identically absent below the transition
  CHECK(abs(density_mu(3, Complex(Real(1) / 2), fx.curve, fx.sup, ctx64)) == 0);

  // supercritical: μ₃ lives on Δ₃ with positive density
  const MeasureFixture& fs = fixture("0.3");
  REQUIRE(fs.sup.delta3.has_value());
  Real xm = (fs.sup.delta3->lo + fs.sup.delta3->hi) / 2;
  Complex d3s = density_mu(3, Complex(xm), fs.curve, fs.sup, ctx64);
  CHECK(d3s.re > 0);
  CHECK(abs(d3s.im) <= d3s.re * pow(Real(10), -6));
}

TEST_CASE("discretized measures: invariants, potential, Cauchy transform") {
  ScopedPrecision scope(ctx64);
  const MeasureFixture& fx = fixture("0.2");
  auto d1 = discretize_mu(1, fx.curve, fx.sup, ctx64, 320);
  auto d2 = discretize_mu(2, fx.curve, fx.sup, ctx64, 320);

  for (const DiscretizedMeasure* dm : {&d1, &d2}) {
    REQUIRE(dm->pieces.size() == 1);
    Real total = 0;
    for (const Real& m : dm->pieces[0].mass) {
      CHECK(m >= 0);
      total += m;
    }
    CHECK(abs(total - dm->total_mass) < ctx64.tol_eighth());
  }
  // node masses reproduce the adaptive-quadrature masses
  CHECK(abs(d1.total_mass - fx.gs->mass().mu1) < tol8());
  CHECK(abs(d2.total_mass - fx.gs->mass().mu2) < pow(Real(10), -6));

  // point-mass surrogate: U of a unit atom is log 1/|z−s|
  {
    DiscretizedMeasure atom;
    QuadPiece p;
    p.nodes = {Complex(Real(1) / 4, Real(1) / 3)};
    p.density = {Complex(Real(1))};
    p.mass = {Real(1)};
    atom.pieces.push_back(p);
    atom.total_mass = 1;
    Complex z(Real(2), Real(-1));
    CHECK(abs(potential_U(atom, z, ctx64) + log(abs(z - p.nodes[0]))) < ctx64.tol_quarter());
    CHECK(abs(cauchy_C(atom, z, ctx64) - Complex(Real(1)) / (p.nodes[0] - z)) <
          ctx64.tol_quarter());
  }

  // U^{μ₁+μ₂} is harmonic off the supports: 4-point mean-value residual
  {
    Real h = Real(1) / 100;
    const Complex pts[10] = {{Real("1.3"), Real("0.4")},   {Real("-1.2"), Real("0.8")},
                             {Real("0.5"), Real("-1.1")},  {Real("1.7"), Real("-0.6")},
                             {Real("-0.9"), Real("-1.4")}, {Real("0.1"), Real("1.5")},
                             {Real("2.1"), Real("0.3")},   {Real("-1.8"), Real("-0.2")},
                             {Real("0.8"), Real("1.2")},   {Real("1.1"), Real("-1.6")}};
    for (const Complex& z : pts) {
      auto U = [&](const Complex& w) { return potential_U(d1, w, ctx64) + potential_U(d2, w, ctx64); };
      Real mean = (U(z + Complex(h)) + U(z - Complex(h)) + U(z + Complex(Real(0), h)) +
                   U(z - Complex(Real(0), h))) /
                  4;
      CHECK(abs(mean - U(z)) < pow(Real(10), -6));
    }
  }

  // Cauchy transforms recover the spectral-curve branches off the supports
  {
    const Complex pts[10] = {{Real("1.5"), Real("0.8")},   {Real("-1.6"), Real("-0.9")},
                             {Real("0.3"), Real("0.8")},   {Real("1.2"), Real("-1.0")},
                             {Real("-0.2"), Real("1.4")},  {Real("2.0"), Real("-0.4")},
                             {Real("-1.3"), Real("1.1")},  {Real("0.7"), Real("-1.5")},
                             {Real("1.9"), Real("1.3")},   {Real("-2.1"), Real("0.5")}};
    for (const Complex& z : pts) {
      XiTriple t = xi_at(z, fx.curve, ctx64);
      Complex c12 = cauchy_C(d1, z, ctx64) + cauchy_C(d2, z, ctx64);
      CHECK(abs(c12 - (t.xi1 - Real(2) * z * z)) < Real(2) * pow(Real(10), -6));
      // μ₃ = 0 here, so C^{μ₁+μ₃} = C^{μ₁}
      Complex c13 = cauchy_C(d1, z, ctx64);
      CHECK(abs(c13 + t.xi2 + z * z) < tol8());
    }
  }

  // supercritical variant of the second identity, with μ₃ present
  {
    const MeasureFixture& fs = fixture("0.3");
    auto e1 = discretize_mu(1, fs.curve, fs.sup, ctx64, 320);
    auto e3 = discretize_mu(3, fs.curve, fs.sup, ctx64, 320);
    CHECK(abs(e1.total_mass + e3.total_mass - fs.curve.alpha) < tol8());
    for (const char* zs : {"1.4", "-1.5"}) {
      Complex z(Real(zs), Real("0.9"));
      XiTriple t = xi_at(z, fs.curve, ctx64);
      Complex c13 = cauchy_C(e1, z, ctx64) + cauchy_C(e3, z, ctx64);
      CHECK(abs(c13 + t.xi2 + z * z) < tol8());
    }
  }
}

TEST_CASE("period integrals of the xi branches") {
  ScopedPrecision scope(ctx64);
  Complex i2pi = 2 * real_pi() * complex_i();
  for (const char* a : {"0.2", "0.3"}) {
    INFO("alpha = " << a);
    const MeasureFixture& fx = fixture(a);
    const SpectralCurveData& cv = fx.curve;
    Real yb = abs(cv.a2.im) + Real(2) / 5;
    Real xr_all = (std::max)(cv.b1, cv.b_star) + Real(1) / 4;
    Real xl_all = (std::min)(cv.a2.re, cv.a1) - Real(9) / 20;

    // ξ₁ jumps on Δ₁ ∪ Δ₂ (∪ Δ₃): one rectangle around everything
    {
      std::vector<Complex> rect = {{xr_all, -yb}, {xr_all, yb}, {xl_all, yb}, {xl_all, -yb}};
      CHECK(abs(loop_integral(cv, 1, rect) + i2pi) < tol8());
    }
    // ξ₂ jumps only on the real cuts: a tight rectangle around [a₁,b₁]
    // (crossing Δ₂ is harmless, ξ₂ is analytic there)
    {
      Real y2 = Real(12) / 100;
      Real xl = cv.a1 - Real(12) / 100;
      std::vector<Complex> rect = {{xr_all, -y2}, {xr_all, y2}, {xl, y2}, {xl, -y2}};
      CHECK(abs(loop_integral(cv, 2, rect) - i2pi * cv.alpha) < tol8());
    }
    // ξ₃ jumps on Δ₂ (∪ Δ₃): right edge through the gap before Δ₁
    // (crossing Δ₁ is harmless for ξ₃)
    {
      Real a_star = *cv.a_star;
      Real xr = (cv.regime == Regime::Subcritical) ? (a_star + cv.a1) / 2 : (a_star + cv.b1) / 2;
      std::vector<Complex> rect = {{xr, -yb}, {xr, yb}, {xl_all, yb}, {xl_all, -yb}};
      CHECK(abs(loop_integral(cv, 3, rect) - i2pi * (1 - cv.alpha)) < tol8());
    }
  }
}

TEST_CASE("g-functions: constants, symmetry, boundary jumps") {
  ScopedPrecision scope(ctx64);
  const MeasureFixture& fx = fixture("0.2");
  const GFunctionSet& gs = *fx.gs;
  Real pi = real_pi();

  // c₁ = c₂ = −πi|μ₂| is purely imaginary and negative there
  Complex c1 = gs.c(1);
  CHECK(abs(c1 - gs.c(2)) == 0);
  CHECK(abs(c1.re) < ctx64.tol_quarter());
  CHECK(c1.im < 0);
  CHECK(abs(c1.im + pi * gs.mass().mu2) < ctx64.tol_quarter());

  // Schwarz symmetry: g_j(conj z) − c_j = conj(g_j(z) − c_j) at 10 points
  const Complex pts[10] = {{Real("0.5"), Real("0.7")},  {Real("1.3"), Real("0.8")},
                           {Real("-0.9"), Real("1.2")}, {Real("1.6"), Real("0.3")},
                           {Real("0.1"), Real("1.4")},  {Real("-1.5"), Real("0.9")},
                           {Real("2.0"), Real("1.0")},  {Real("0.8"), Real("1.7")},
                           {Real("-0.3"), Real("1.9")}, {Real("1.1"), Real("0.5")}};
  for (int k = 0; k < 10; ++k) {
    int j = k % 3 + 1;
    INFO("point " << k << ", j = " << j);
    Complex up = gs.g(j, pts[k]) - gs.c(j);
    Complex dn = gs.g(j, conj(pts[k])) - gs.c(j);
    CHECK(abs(dn - conj(up)) < tol8());
  }

  // g₁₊ − g₁₋ = −2πi on (−∞, a_*)
  {
    Real eps = tol8();
    Real x = fx.sup.a_star - Real(2) / 5;
    Complex jump = gs.g(1, Complex(x, eps)) - gs.g(1, Complex(x, -eps));
    CHECK(abs(jump + 2 * pi * complex_i()) < pow(Real(10), -6));
  }

  // supercritical: g₂₊ = g₃₋ across Δ₃
  {
    const MeasureFixture& fs = fixture("0.3");
    REQUIRE(fs.sup.delta3.has_value());
    Real eps = tol8();
    Real x = (fs.sup.delta3->lo + fs.sup.delta3->hi) / 2;
    Complex lhs = fs.gs->g(2, Complex(x, eps));
    Complex rhs = fs.gs->g(3, Complex(x, -eps));
    CHECK(abs(lhs - rhs) < pow(Real(10), -6));
  }
}

TEST_CASE("r-constants are real and stable in the extrapolation radius") {
  ScopedPrecision scope(ctx64);
  for (const char* a : {"0.2", "0.3", "0.38"}) {
    INFO("alpha = " << a);
    const GFunctionSet& gs = *fixture(a).gs;
    for (int j = 1; j <= 3; ++j) {
      Real base = gs.r(j);  // throws if the limit has an imaginary part > 1e-8
      Real doubled = gs.r(j, Real(2000));
      CHECK(abs(base - doubled) < tol8());
    }
  }
}

TEST_CASE("phi-functions match direct integrals of branch differences") {
  ScopedPrecision scope(ctx64);
  const MeasureFixture& fx = fixture("0.2");
  const SpectralCurveData& cv = fx.curve;

  // Φ₁ = ∫_{b₁}^z (ξ₁ − ξ₂): straight legs in the right half plane
  const Complex p1[8] = {{Real("1.4"), Real("0.9")}, {Real("1.1"), Real("-0.7")},
                         {Real("0.6"), Real("1.2")}, {Real("0.5"), Real("-1.1")},
                         {Real("1.8"), Real("0.2")}, {Real("0.3"), Real("0.6")},
                         {Real("1.2"), Real("1.5")}, {Real("0.9"), Real("-1.3")}};
  for (const Complex& z : p1) {
    INFO("phi1 at (" << to_double(z.re) << "," << to_double(z.im) << ")");
    Complex direct = direct_pair_integral(cv, 1, 2, Complex(cv.b1), {}, z, /*sqrt_base=*/true);
    CHECK(mod_2pi_i(direct - phi_function(z, 1, *fx.gs)) < tol8());
  }

  // Φ₂ = ∫_{b₂}^z (ξ₁ − ξ₃): targets in the upper half plane, the straight
  // leg from b₂ passes above the arc
  const Complex p2[6] = {{Real("1.0"), Real("0.5")}, {Real("0.6"), Real("1.0")},
                         {Real("1.4"), Real("1.1")}, {Real("0.2"), Real("1.3")},
                         {Real("1.7"), Real("0.7")}, {Real("0.8"), Real("1.6")}};
  for (const Complex& z : p2) {
    INFO("phi2 at (" << to_double(z.re) << "," << to_double(z.im) << ")");
    Complex direct = direct_pair_integral(cv, 1, 3, cv.b2, {}, z, /*sqrt_base=*/true);
    CHECK(mod_2pi_i(direct - phi_function(z, 2, *fx.gs)) < tol8());
  }

  // Φ₃ = ∫ (ξ₃ − ξ₂) from min(a₁, a_*), leaving into the lower sector
  {
    Complex base(fx.sup.a_star);  // subcritical: a_* < a₁
    Complex joint(Real("0.2"), Real("-0.5"));
    const Complex p3[6] = {{Real("0.8"), Real("-0.5")}, {Real("1.3"), Real("-0.9")},
                           {Real("0.4"), Real("-0.8")}, {Real("1.6"), Real("-0.4")},
                           {Real("0.7"), Real("-1.2")}, {Real("1.1"), Real("-0.3")}};
    for (const Complex& z : p3) {
      INFO("phi3 at (" << to_double(z.re) << "," << to_double(z.im) << ")");
      Complex direct = direct_pair_integral(cv, 3, 2, base, {joint}, z, /*sqrt_base=*/false);
      CHECK(mod_2pi_i(direct - phi_function(z, 3, *fx.gs)) < tol8());
    }
  }

  // supercritical Φ₃: base a₁ is a square-root point of the (ξ₂,ξ₃) pair
  {
    const MeasureFixture& fs = fixture("0.3");
    Complex base(fs.curve.a1);
    Complex joint(fs.curve.a1 + Real(1) / 10, Real("-0.5"));
    const Complex p3[2] = {{Real("0.9"), Real("-0.8")}, {Real("1.5"), Real("-0.5")}};
    for (const Complex& z : p3) {
      INFO("phi3 supercritical at (" << to_double(z.re) << "," << to_double(z.im) << ")");
      Complex direct =
          direct_pair_integral(fs.curve, 3, 2, base, {joint}, z, /*sqrt_base=*/true);
      CHECK(mod_2pi_i(direct - phi_function(z, 3, *fs.gs)) < tol8());
    }
  }
}

TEST_CASE("phi-functions: sign structure near the supports") {
  ScopedPrecision scope(ctx64);
  const MeasureFixture& fx = fixture("0.2");
  Real off = Real(1) / 1000;

  // Φ₁(b₁) = 0
  {
    Real h = pow(Real(10), -6);
    Complex z(fx.curve.b1 + h, h);
    CHECK(abs(phi_function(z, 1, *fx.gs)) < pow(Real(10), -6));
  }

  // lens inequality Re Φ₁ < 0 on both sides of the interior of Δ₁
  {
    Real x = (fx.sup.delta1.lo + fx.sup.delta1.hi) / 2;
    CHECK(phi_function(Complex(x, off), 1, *fx.gs).re < 0);
    CHECK(phi_function(Complex(x, -off), 1, *fx.gs).re < 0);
  }

  // lens inequality Re Φ₂ < 0 on both sides of the interior of Δ₂
  {
    const ArcPolyline& arc = fx.sup.delta2;
    size_t k = arc.size() / 4;
    Complex tang = arc.nodes[k + 1] - arc.nodes[k - 1];
    Complex nrm = complex_i() * (tang / abs(tang));
    CHECK(phi_function(arc.nodes[k] + nrm * off, 2, *fx.gs).re < 0);
    CHECK(phi_function(arc.nodes[k] - nrm * off, 2, *fx.gs).re < 0);
  }

  // supercritical: Re Φ₃ vanishes on (a₁, a_*), is negative in the lens, and
  // its lower boundary value is positive to the left of a₁
  {
    const MeasureFixture& fs = fixture("0.3");
    REQUIRE(fs.sup.delta3.has_value());
    Real x = (fs.sup.delta3->lo + fs.sup.delta3->hi) / 2;
    Complex on = phi_function(Complex(x, tol8()), 3, *fs.gs);
    CHECK(abs(on.re) < pow(Real(10), -6));
    CHECK(phi_function(Complex(x, off), 3, *fs.gs).re < 0);
    CHECK(phi_function(Complex(x, -off), 3, *fs.gs).re < 0);
    for (const char* dxs : {"0.3", "1.0"}) {
      Real xx = fs.curve.a1 - Real(dxs);
      CHECK(phi_function(Complex(xx, -tol8()), 3, *fs.gs).re > 0);
    }
  }
}
