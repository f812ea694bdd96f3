#pragma once

#include "mopslab/complex.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopslab {

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  Complex& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
  const Complex& operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }

  ComplexMatrix transpose() const {
    ComplexMatrix t(cols_, rows_);
    for (size_t i = 0; i < rows_; ++i)
      for (size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  // Max row sum of absolute values.
  Real norm_inf() const {
    Real m = 0;
    for (size_t i = 0; i < rows_; ++i) {
      Real s = 0;
      for (size_t j = 0; j < cols_; ++j) s += abs((*this)(i, j));
      m = (std::max)(m, s);
    }
    return m;
  }

  std::vector<Complex> apply(const std::vector<Complex>& x) const {
    std::vector<Complex> y(rows_);
    for (size_t i = 0; i < rows_; ++i) {
      Complex s;
      for (size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<Complex> data_;
};

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(const std::string& msg, size_t step_, Real pivot_, Real threshold_)
      : std::runtime_error(msg), step(step_), pivot_abs(pivot_), threshold(threshold_) {}
  size_t step;
  Real pivot_abs;
  Real threshold;
};

struct SolveReport {
  std::vector<Real> pivot_profile;  // |pivot| at each elimination step
  Real min_pivot = 0;
  Real norm_A = 0;
};

// Gaussian elimination with full pivoting. Throws SingularMatrixError when a
// pivot drops below 10^(-digits + 2*guard) * ||A||_inf.
inline std::vector<Complex> solve_full_pivot(ComplexMatrix A, std::vector<Complex> b,
                                             const PrecisionCtx& ctx,
                                             SolveReport* report = nullptr) {
  ScopedPrecision scope(ctx);
  const size_t n = A.rows();
  if (A.cols() != n || b.size() != n)
    throw std::invalid_argument("solve_full_pivot: dimension mismatch");

  Real normA = A.norm_inf();
  Real threshold = pow(Real(10), -int(ctx.digits) + 2 * int(ctx.guard_digits)) * normA;
  if (report) {
    report->norm_A = normA;
    report->pivot_profile.clear();
  }

  std::vector<size_t> col_perm(n);
  for (size_t j = 0; j < n; ++j) col_perm[j] = j;

  Real min_pivot = -1;
  for (size_t k = 0; k < n; ++k) {
    size_t pi = k, pj = k;
    Real best = abs(A(k, k));
    for (size_t i = k; i < n; ++i)
      for (size_t j = k; j < n; ++j) {
        Real v = abs(A(i, j));
        if (v > best) { best = v; pi = i; pj = j; }
      }
    if (best <= threshold)
      throw SingularMatrixError("solve_full_pivot: pivot below singularity threshold", k, best,
                                threshold);
    if (pi != k) {
      for (size_t j = k; j < n; ++j) std::swap(A(k, j), A(pi, j));
      std::swap(b[k], b[pi]);
    }
    if (pj != k) {
      for (size_t i = 0; i < n; ++i) std::swap(A(i, k), A(i, pj));
      std::swap(col_perm[k], col_perm[pj]);
    }
    if (report) report->pivot_profile.push_back(best);
    if (min_pivot < 0 || best < min_pivot) min_pivot = best;

    Complex inv_piv = Complex(Real(1)) / A(k, k);
    for (size_t i = k + 1; i < n; ++i) {
      Complex factor = A(i, k) * inv_piv;
      if (factor == Complex()) continue;
      for (size_t j = k; j < n; ++j) A(i, j) -= factor * A(k, j);
      b[i] -= factor * b[k];
    }
  }
  if (report) report->min_pivot = min_pivot;

  std::vector<Complex> y(n);
  for (size_t k = n; k-- > 0;) {
    Complex s = b[k];
    for (size_t j = k + 1; j < n; ++j) s -= A(k, j) * y[j];
    y[k] = s / A(k, k);
  }
  std::vector<Complex> x(n);
  for (size_t j = 0; j < n; ++j) x[col_perm[j]] = y[j];
  return x;
}

struct LinearSolution {
  std::vector<Complex> x;
  SolveReport report;
};

inline LinearSolution solve_linear(const ComplexMatrix& A, const std::vector<Complex>& b,
                                   const PrecisionCtx& ctx) {
  LinearSolution sol;
  sol.x = solve_full_pivot(A, b, ctx, &sol.report);
  return sol;
}

inline Real residual_inf(const ComplexMatrix& A, const std::vector<Complex>& x,
                         const std::vector<Complex>& b) {
  std::vector<Complex> Ax = A.apply(x);
  Real m = 0;
  for (size_t i = 0; i < b.size(); ++i) m = (std::max)(m, abs(Ax[i] - b[i]));
  return m;
}

}  // namespace mopslab
