#include <catch2/catch_amalgamated.hpp>

#include "mopslab/mops.hpp"

#include <algorithm>
#include <filesystem>

using namespace mopslab;

namespace {
const PrecisionCtx ctx100(100);
}

TEST_CASE("cubic moments: closed form values and vanishing pattern") {
  ScopedPrecision scope(ctx100);
  Real g13 = gamma_rational(1, 3, ctx100);
  Real pi = real_pi();

  SECTION("gamma2 k=0 equals (2i/3)Γ(1/3)sin(2π/3)") {
    Complex want = Complex(Real(0), 2 * g13 / 3 * sin(2 * pi / 3));
    CHECK(abs(moment_cubic(2, 0, ctx100) - want) < ctx100.tol_half());
  }
  SECTION("gamma1 k=0 modulus is Γ(1/3)·√3/3") {
    CHECK(abs(abs(moment_cubic(1, 0, ctx100)) - g13 * sqrt(Real(3)) / 3) < ctx100.tol_half());
  }
  SECTION("exact zeros iff k ≡ 2 mod 3") {
    for (long k = 0; k <= 20; ++k) {
      bool zero1 = moment_cubic(1, k, ctx100) == Complex();
      bool zero2 = moment_cubic(2, k, ctx100) == Complex();
      CHECK(zero1 == (k % 3 == 2));
      CHECK(zero2 == (k % 3 == 2));
    }
  }
  SECTION("gamma2 moments purely imaginary") {
    for (long k = 0; k <= 20; ++k) {
      Complex f2 = moment_cubic(2, k, ctx100);
      CHECK(abs(f2.re) <= ctx100.tol_half() * (1 + abs(f2)));
    }
  }
  SECTION("contour identity conj(f1) = f1 - f2") {
    for (long k = 0; k <= 20; ++k) {
      Complex f1 = moment_cubic(1, k, ctx100);
      Complex f2 = moment_cubic(2, k, ctx100);
      CHECK(abs(conj(f1) - (f1 - f2)) < ctx100.tol_half() * (1 + abs(f1)));
    }
  }
}

TEST_CASE("moments vs ray quadrature oracle") {
  for (long k : {0L, 2L, 5L}) {
    CHECK(verify_moment_by_quadrature(gamma1_contour(), k, ctx100) < ctx100.tol_half());
    CHECK(verify_moment_by_quadrature(gamma2_contour(), k, ctx100) < ctx100.tol_half());
  }
  // general K
  CHECK(verify_moment_by_quadrature(RayPairContour{5, 1, 4}, 7, ctx100) < ctx100.tol_half());
  CHECK(verify_moment_by_quadrature(RayPairContour{7, 3, 4}, 11, ctx100) < ctx100.tol_half());
}

TEST_CASE("moment table JSON round trip and regeneration determinism") {
  ScopedPrecision scope(ctx100);
  MomentTable t = build_moment_table(gamma2_contour(), 12, ctx100);
  // regeneration is bit-identical at the file level
  MomentTable t_again = build_moment_table(gamma2_contour(), 12, ctx100);
  CHECK(moment_table_to_json(t).dump() == moment_table_to_json(t_again).dump());
  // round trip keeps far more than the quoted precision
  MomentTable t2 = moment_table_from_json(moment_table_to_json(t));
  Real slack = pow(Real(10), -int(ctx100.digits) - 15);
  for (long k = 0; k <= 12; ++k) CHECK(abs(t.at(k) - t2.at(k)) <= slack * (1 + abs(t.at(k))));
}

TEST_CASE("moment cache build/load") {
  auto dir = std::filesystem::temp_directory_path() / "mopslab-test-cache";
  std::filesystem::remove_all(dir);
  PrecisionCtx c(60);
  MomentTable t = load_or_build_moment_table(gamma1_contour(), 8, c, dir);
  CHECK(std::filesystem::exists(dir / moment_cache_filename(gamma1_contour(), 60)));
  MomentTable t2 = load_or_build_moment_table(gamma1_contour(), 8, c, dir);
  Real slack = pow(Real(10), -int(c.digits) - 15);
  for (long k = 0; k <= 8; ++k) CHECK(abs(t.at(k) - t2.at(k)) <= slack * (1 + abs(t.at(k))));
  std::filesystem::remove_all(dir);
}

TEST_CASE("mixed moment matrix layout") {
  ScopedPrecision scope(ctx100);
  SECTION("(1,0) is [f1^(0)]") {
    ComplexMatrix H = build_mixed_moment_matrix(MopIndex{1, 0}, ctx100);
    REQUIRE(H.rows() == 1);
    CHECK(abs(H(0, 0) - moment_cubic(1, 0, ctx100)) < ctx100.eps());
  }
  SECTION("(1,1) layout") {
    ComplexMatrix H = build_mixed_moment_matrix(MopIndex{1, 1}, ctx100);
    CHECK(abs(H(0, 0) - moment_cubic(1, 0, ctx100)) < ctx100.eps());
    CHECK(abs(H(0, 1) - moment_cubic(2, 0, ctx100)) < ctx100.eps());
    CHECK(abs(H(1, 0) - moment_cubic(1, 1, ctx100)) < ctx100.eps());
    CHECK(abs(H(1, 1) - moment_cubic(2, 1, ctx100)) < ctx100.eps());
  }
  SECTION("(3,7) against brute-force regeneration") {
    MopIndex idx{3, 7};
    ComplexMatrix H = build_mixed_moment_matrix(idx, ctx100);
    for (long i = 0; i < 10; ++i)
      for (long j = 0; j < 10; ++j) {
        Complex want = j < 3 ? moment_cubic(1, i + j, ctx100) : moment_cubic(2, i + j - 3, ctx100);
        CHECK(abs(H(i, j) - want) < ctx100.eps());
      }
  }
}

TEST_CASE("type II small closed forms") {
  ScopedPrecision scope(ctx100);
  SECTION("(1,0): P = z - f1^(1)/f1^(0)") {
    MopIndex idx{1, 0};
    ComplexPoly P = solve_type_II(idx, make_tables(idx, ctx100), ctx100);
    REQUIRE(P.degree() == 1);
    CHECK(P.is_monic());
    Complex want = -(moment_cubic(1, 1, ctx100) / moment_cubic(1, 0, ctx100));
    CHECK(abs(P[0] - want) < ctx100.tol_half());
  }
  SECTION("(0,1): P = z - f2^(1)/f2^(0), single zero real by conjugation symmetry") {
    MopIndex idx{0, 1};
    ComplexPoly P = solve_type_II(idx, make_tables(idx, ctx100), ctx100);
    Complex root = -P[0];
    Complex want = moment_cubic(2, 1, ctx100) / moment_cubic(2, 0, ctx100);
    CHECK(abs(root - want) < ctx100.tol_half());
    // both f2 moments are purely imaginary, so the ratio is real
    CHECK(abs(root.im) < ctx100.tol_half());
  }
}

TEST_CASE("type I small closed forms") {
  ScopedPrecision scope(ctx100);
  SECTION("(0,1): B = 1/f2^(0)") {
    MopIndex idx{0, 1};
    auto [A, B] = solve_type_I(idx, make_tables(idx, ctx100), ctx100);
    CHECK(A.is_zero());
    CHECK(abs(B[0] - Complex(Real(1)) / moment_cubic(2, 0, ctx100)) < ctx100.tol_half());
  }
  SECTION("(1,1): Cramer oracle") {
    MopIndex idx{1, 1};
    auto [A, B] = solve_type_I(idx, make_tables(idx, ctx100), ctx100);
    Complex f10 = moment_cubic(1, 0, ctx100), f20 = moment_cubic(2, 0, ctx100);
    Complex f11 = moment_cubic(1, 1, ctx100), f21 = moment_cubic(2, 1, ctx100);
    Complex det = f10 * f21 - f20 * f11;
    CHECK(abs(A[0] - (-f20 / det)) < ctx100.tol_half());
    CHECK(abs(B[0] - (f10 / det)) < ctx100.tol_half());
  }
}

TEST_CASE("orthogonality residual oracle") {
  ScopedPrecision scope(ctx100);
  for (auto [n, m] : {std::pair<long, long>{3, 7}, {7, 3}, {5, 5}, {6, 24}}) {
    MopIndex idx{n, m};
    MopTables t = make_tables(idx, ctx100);
    MopSolution sol;
    sol.index = idx;
    sol.P = solve_type_II(idx, t, ctx100);
    sol.type_II_exists = true;
    auto [A, B] = solve_type_I(idx, t, ctx100);
    sol.A = A;
    sol.B = B;
    sol.type_I_exists = true;

    CHECK(sol.P->degree() == n + m);
    CHECK(sol.P->is_monic());
    CHECK(A.degree() <= n - 1);
    CHECK(B.degree() <= m - 1);
    CHECK(orthogonality_residual(sol, MopKind::TypeII, t, ctx100) < ctx100.tol_half());
    CHECK(orthogonality_residual(sol, MopKind::TypeI, t, ctx100) < ctx100.tol_half());
  }
}

TEST_CASE("residual sensitivity: perturbing one coefficient is detected") {
  ScopedPrecision scope(ctx100);
  MopIndex idx{3, 7};
  MopTables t = make_tables(idx, ctx100);
  MopSolution sol;
  sol.index = idx;
  sol.P = solve_type_II(idx, t, ctx100);
  sol.type_II_exists = true;
  (*sol.P)[4] += Complex(pow(Real(10), -20));
  CHECK(orthogonality_residual(sol, MopKind::TypeII, t, ctx100) > ctx100.tol_half() * 100);
}

TEST_CASE("uniqueness under row permutation") {
  ScopedPrecision scope(ctx100);
  MopIndex idx{4, 6};
  MopTables t = make_tables(idx, ctx100);
  long N = idx.N();
  ComplexMatrix H = build_mixed_moment_matrix(idx, t, ctx100);
  std::vector<Complex> rhs(N);
  rhs[N - 1] = Complex(1);
  auto x = solve_full_pivot(H, rhs, ctx100);
  // reverse the row order
  ComplexMatrix Hp(N, N);
  std::vector<Complex> rhsp(N);
  for (long i = 0; i < N; ++i) {
    rhsp[i] = rhs[N - 1 - i];
    for (long j = 0; j < N; ++j) Hp(i, j) = H(N - 1 - i, j);
  }
  auto xp = solve_full_pivot(Hp, rhsp, ctx100);
  for (long i = 0; i < N; ++i) CHECK(abs(x[i] - xp[i]) < ctx100.tol_half() * (1 + abs(x[i])));
}

TEST_CASE("conjugate symmetry of P zeros (n <= m)") {
  ScopedPrecision scope(ctx100);
  MopIndex idx{3, 12};
  MopTables t = make_tables(idx, ctx100);
  ComplexPoly P = solve_type_II(idx, t, ctx100);
  auto roots = poly_roots_raw(P, ctx100);
  for (const auto& r : roots) {
    Real best = -1;
    for (const auto& s : roots) {
      Real d = abs(conj(r) - s);
      if (best < 0 || d < best) best = d;
    }
    CHECK(best < ctx100.tol_quarter());
  }
}

TEST_CASE("rescale_zeros and counting_measure") {
  ScopedPrecision scope(ctx100);
  SECTION("trivials") {
    auto z = rescale_zeros({Complex()}, 17, 3);
    CHECK(z[0] == Complex());
    auto z2 = rescale_zeros({Complex(2, 3)}, 1, 3);
    CHECK(z2[0] == Complex(2, 3));
    auto z3 = rescale_zeros({Complex(8)}, 8, 3);
    CHECK(abs(z3[0] - Complex(4)) < ctx100.tol_half());
  }
  SECTION("total mass of P measure is 1") {
    MopIndex idx{2, 3};
    ComplexPoly P = solve_type_II(idx, make_tables(idx, ctx100), ctx100);
    CountingMeasure nu = counting_measure(P, idx.N(), 3, ctx100);
    CHECK(nu.total_mass() == 1);
  }
}

TEST_CASE("interlace_check") {
  ScopedPrecision scope(ctx100);
  auto R = [](double x) { return Real(x); };
  SECTION("holds") {
    auto rep = interlace_check({R(1), R(3)}, {R(0), R(2), R(4)}, R(-10), R(10));
    CHECK(rep.holds);
    CHECK_FALSE(rep.vacuous);
  }
  SECTION("fails") {
    auto rep = interlace_check({R(1), R(2)}, {R(0), R(3)}, R(-10), R(10));
    CHECK_FALSE(rep.holds);
    REQUIRE(rep.violations.size() == 1);
  }
  SECTION("vacuous") {
    auto rep = interlace_check({}, {R(0)}, R(-10), R(10));
    CHECK(rep.holds);
    CHECK(rep.vacuous);
  }
}

TEST_CASE("general K pipeline") {
  PrecisionCtx c(120);
  ScopedPrecision scope(c);
  SECTION("K=5 symmetric contours (10,20) exists") {
    MopIndex idx{10, 20, 5, RayPairContour{5, 0, 3}, RayPairContour{5, 2, 3}};
    MopSolution sol = solve_general_K(idx, c);
    CHECK(sol.type_II_exists);
    CHECK(sol.type_I_exists);
    CHECK(sol.P->degree() == 30);
  }
  SECTION("ell == kappa rejected") {
    MopIndex idx{1, 1, 5, RayPairContour{5, 2, 2}, RayPairContour{5, 1, 3}};
    CHECK_THROWS(solve_general_K(idx, c));
  }
}
