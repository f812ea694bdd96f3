#pragma once

#include "mopslab/gamma.hpp"
#include "mopslab/quadrature.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

// Oriented contour (∞·e^{2πi·kappa/K} -> 0 -> ∞·e^{2πi·ell/K}): the union of
// the ray toward e^{2πi·ell/K} and the reversed ray toward e^{2πi·kappa/K}.
struct RayPairContour {
  int K = 3;
  int ell = 0;
  int kappa = 2;

  void validate() const {
    if (K < 3) throw std::invalid_argument("RayPairContour: K must be >= 3");
    if (ell < 0 || ell >= K || kappa < 0 || kappa >= K)
      throw std::invalid_argument("RayPairContour: ray index out of [0,K)");
    if (ell == kappa) throw std::invalid_argument("RayPairContour: ell == kappa");
  }
};

// gamma1: asymptotic directions 0 and -2pi/3; gamma2: +2pi/3 and -2pi/3.
inline RayPairContour gamma1_contour() { return RayPairContour{3, 0, 2}; }
inline RayPairContour gamma2_contour() { return RayPairContour{3, 1, 2}; }

namespace detail {

// e^{2πi·j·(k+1)/K} with the angle reduced exactly mod K first.
inline Complex ray_phase(long j, long k, int K, const PrecisionCtx& ctx) {
  ScopedPrecision scope(ctx);
  long r = (j * ((k + 1) % K)) % K;
  if (r < 0) r += K;
  return polar(Real(1), 2 * real_pi() * Real(r) / K);
}

}  // namespace detail

// ∫ z^k e^{-z^K} dz over the ray pair:
// (e^{2πi·ell(k+1)/K} − e^{2πi·kappa(k+1)/K})·Γ((k+1)/K)/K.
inline Complex moment_general(const RayPairContour& c, long k, const PrecisionCtx& ctx) {
  c.validate();
  if (k < 0) throw std::invalid_argument("moment_general: k must be >= 0");
  ScopedPrecision scope(ctx);
  if (((k + 1) % c.K) * ((c.ell - c.kappa) % c.K) % c.K == 0) return Complex();
  Complex phase = detail::ray_phase(c.ell, k, c.K, ctx) - detail::ray_phase(c.kappa, k, c.K, ctx);
  return phase * (gamma_rational(k + 1, c.K, ctx) / c.K);
}

inline Complex moment_cubic(int which, long k, const PrecisionCtx& ctx) {
  if (which != 1 && which != 2) throw std::invalid_argument("moment_cubic: which must be 1 or 2");
  return moment_general(which == 1 ? gamma1_contour() : gamma2_contour(), k, ctx);
}

// |closed form − truncated ray quadrature|. Independent of the Gamma
// evaluation: the ray integrals reduce to ∫₀^R t^k e^{−t^K} dt done by GL
// panels, truncated where the integrand drops below 10^(−digits−10).
inline Real verify_moment_by_quadrature(const RayPairContour& c, long k,
                                        const PrecisionCtx& ctx) {
  c.validate();
  ScopedPrecision scope(ctx);
  // Solve R^K − k·log R = L by fixed point.
  Real L = (Real(int(ctx.digits)) + 20) * log(Real(10));
  Real R = pow(L + k, Real(1) / c.K) + 1;
  for (int i = 0; i < 20; ++i) R = pow(L + k * log(R), Real(1) / c.K);
  R += 1;
  Complex radial = integrate_adaptive(
      [&](const Real& t) { return Complex(pow(t, int(k)) * exp(-pow(t, c.K))); }, Real(0), R,
      ctx);
  Complex quad = (detail::ray_phase(c.ell, k, c.K, ctx) -
                  detail::ray_phase(c.kappa, k, c.K, ctx)) *
                 radial;
  return abs(quad - moment_general(c, k, ctx));
}

struct MomentTable {
  RayPairContour contour;
  unsigned digits = 0;
  std::vector<Complex> values;  // index k = 0 .. k_max

  const Complex& at(long k) const {
    if (k < 0 || size_t(k) >= values.size())
      throw std::out_of_range("MomentTable: need k_max >= " + std::to_string(k) +
                              ", table has " + std::to_string(values.size()) + " entries");
    return values[size_t(k)];
  }
};

inline MomentTable build_moment_table(const RayPairContour& c, long k_max,
                                      const PrecisionCtx& ctx) {
  MomentTable t;
  t.contour = c;
  t.digits = ctx.digits;
  t.values.reserve(k_max + 1);
  for (long k = 0; k <= k_max; ++k) t.values.push_back(moment_general(c, k, ctx));
  return t;
}

inline nlohmann::json moment_table_to_json(const MomentTable& t) {
  nlohmann::json j;
  j["K"] = t.contour.K;
  j["ell"] = t.contour.ell;
  j["kappa"] = t.contour.kappa;
  j["digits"] = t.digits;
  nlohmann::json vals = nlohmann::json::array();
  for (size_t k = 0; k < t.values.size(); ++k) {
    // digits + 25 significant digits round-trips the guard-digit payload too.
    vals.push_back({{"k", k},
                    {"re", to_decimal_string(t.values[k].re, t.digits + 25)},
                    {"im", to_decimal_string(t.values[k].im, t.digits + 25)}});
  }
  j["values"] = std::move(vals);
  return j;
}

inline MomentTable moment_table_from_json(const nlohmann::json& j) {
  MomentTable t;
  t.contour.K = j.at("K").get<int>();
  t.contour.ell = j.at("ell").get<int>();
  t.contour.kappa = j.at("kappa").get<int>();
  t.digits = j.at("digits").get<unsigned>();
  ScopedPrecision scope(PrecisionCtx(t.digits < 50 ? 50 : t.digits));
  const auto& vals = j.at("values");
  t.values.resize(vals.size());
  for (const auto& v : vals) {
    size_t k = v.at("k").get<size_t>();
    t.values.at(k) = Complex(Real(v.at("re").get<std::string>()),
                             Real(v.at("im").get<std::string>()));
  }
  return t;
}

inline std::filesystem::path moment_cache_dir() {
  if (const char* env = std::getenv("MOPSLAB_CACHE_DIR")) return env;
  return std::filesystem::path(".") / "moment-cache";
}

inline std::string moment_cache_filename(const RayPairContour& c, unsigned digits) {
  return "moments_K" + std::to_string(c.K) + "_" + std::to_string(c.ell) + "_" +
         std::to_string(c.kappa) + "_d" + std::to_string(digits) + ".json";
}

inline void save_moment_table(const MomentTable& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / moment_cache_filename(t.contour, t.digits));
  out << moment_table_to_json(t).dump(1) << "\n";
}

// Returns a cached table covering k_max at ctx.digits, building and saving it
// when absent or too shallow.
inline MomentTable load_or_build_moment_table(const RayPairContour& c, long k_max,
                                              const PrecisionCtx& ctx,
                                              std::filesystem::path dir = {}) {
  if (dir.empty()) dir = moment_cache_dir();
  auto file = dir / moment_cache_filename(c, ctx.digits);
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    nlohmann::json j;
    in >> j;
    MomentTable t = moment_table_from_json(j);
    if (long(t.values.size()) > k_max) return t;
  }
  MomentTable t = build_moment_table(c, k_max, ctx);
  save_moment_table(t, dir);
  return t;
}

}  // namespace mopslab
