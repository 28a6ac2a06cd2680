// SPDX-License-Identifier: Apache-2.0
//
// Compressed-row symmetric matrices and (preconditioned) conjugate gradient.
// All reductions run in a fixed order, so results are bitwise reproducible.

#ifndef NINT_SPARSE_HPP
#define NINT_SPARSE_HPP

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "nint/common.hpp"

namespace nint {

struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nonzeros() const noexcept { return val.size(); }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
      y[r] = s;
    }
  }

  double at(std::size_t r, std::size_t c) const {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col[k] == c) return val[k];
    }
    return 0.0;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) d[r] = at(r, r);
    return d;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

enum class Preconditioner { None, Jacobi };

struct CgOptions {
  double tolerance = 1e-9;
  int max_iterations = 5000;
  Preconditioner preconditioner = Preconditioner::None;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  /// ||r - M x|| / max(||r||, machine epsilon) of the returned x.
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradient on M x = r starting at x0. M must be symmetric positive
/// semidefinite and r must lie in its range; the iteration stops once the
/// relative residual drops to `tolerance` or after `max_iterations` steps.
inline CgResult cg_solve(const CsrMatrix& M, std::span<const double> r, std::span<const double> x0,
                         const CgOptions& options = {}) {
  const std::size_t n = M.rows;
  if (r.size() != n || x0.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "cg_solve: vector sizes do not match the matrix");
  }
  CgResult out;
  out.x.assign(x0.begin(), x0.end());
  const double ref = std::max(norm2(r), std::numeric_limits<double>::epsilon());

  std::vector<double> res(n), z(n), p(n), Ap(n);
  M.multiply(out.x, Ap);
  for (std::size_t i = 0; i < n; ++i) res[i] = r[i] - Ap[i];
  double res_norm = norm2(res);
  out.relative_residual = res_norm / ref;
  if (out.relative_residual <= options.tolerance) {
    out.converged = true;
    return out;
  }

  std::vector<double> inv_diag;
  if (options.preconditioner == Preconditioner::Jacobi) {
    inv_diag = M.diagonal();
    for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 0.0;
  }
  const auto apply_precond = [&] {
    if (inv_diag.empty()) {
      z = res;
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * res[i];
    }
  };

  apply_precond();
  p = z;
  double rz = dot(res, z);
  for (int it = 1; it <= options.max_iterations; ++it) {
    M.multiply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;
    const double step = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += step * p[i];
      res[i] -= step * Ap[i];
    }
    out.iterations = it;
    res_norm = norm2(res);
    out.relative_residual = res_norm / ref;
    if (out.relative_residual <= options.tolerance) {
      out.converged = true;
      break;
    }
    apply_precond();
    const double rz_next = dot(res, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return out;
}

}  // namespace nint

#endif  // NINT_SPARSE_HPP
