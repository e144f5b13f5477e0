#pragma once

#include <cmath>
#include <span>
#include <string>

#include "uaamg/error.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

/// Pointwise Jacobi-type relaxation x <- x + M^{-1}(b - A x).
///   jacobi:    M = D / omega
///   l1_jacobi: M_ii = a_ii + sum_{j != i} |a_ij|   (parameter free)
struct SmootherSpec {
  enum class Kind { jacobi, l1_jacobi };

  Kind kind = Kind::l1_jacobi;
  double omega = 2.0 / 3.0;
  index_t sweeps = 1;

  static SmootherSpec l1_jacobi(index_t sweeps = 1) { return {Kind::l1_jacobi, 1.0, sweeps}; }
  static SmootherSpec jacobi(double omega = 2.0 / 3.0, index_t sweeps = 1) {
    return {Kind::jacobi, omega, sweeps};
  }

  void validate() const {
    if (kind == Kind::jacobi && !(omega > 0.0 && omega <= 1.0))
      throw InvalidArgument("Jacobi damping must satisfy 0 < omega <= 1");
    if (sweeps < 1) throw InvalidArgument("smoother needs at least one sweep");
  }

  std::string name() const {
    return kind == Kind::l1_jacobi ? "l1" : "jacobi:" + std::to_string(omega);
  }
};

/// Diagonal of M^{-1}. Throws when some M_ii vanishes.
inline Vector smoother_inverse_diagonal(const SparseMatrix& A, const SmootherSpec& spec) {
  spec.validate();
  Vector inv(A.rows());
  for (index_t i = 0; i < A.rows(); ++i) {
    double diag = 0.0, off = 0.0;
    const auto cols = A.row_cols(i);
    const auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i)
        diag = vals[k];
      else
        off += std::abs(vals[k]);
    }
    const double m = spec.kind == SmootherSpec::Kind::l1_jacobi ? diag + off : diag / spec.omega;
    if (!(m > 0.0)) throw NumericalError("smoother: zero or negative M_ii in row " + std::to_string(i));
    inv[i] = 1.0 / m;
  }
  return inv;
}

/// `sweeps` relaxation steps with a precomputed M^{-1}. `work` needs A.rows() entries.
inline void smooth(const SparseMatrix& A, std::span<const double> inv_diag, std::span<double> x,
                   std::span<const double> b, index_t sweeps, std::span<double> work) {
  for (index_t s = 0; s < sweeps; ++s) {
    residual(A, x, b, work);
    parallel_for(x.size(), [&](index_t i) { x[i] += inv_diag[i] * work[i]; });
  }
}

inline void smooth(const SparseMatrix& A, const SmootherSpec& spec, std::span<double> x,
                   std::span<const double> b) {
  if (x.size() != A.rows() || b.size() != A.rows()) throw InvalidArgument("smooth: size mismatch");
  const Vector inv = smoother_inverse_diagonal(A, spec);
  Vector work(A.rows());
  smooth(A, inv, x, b, spec.sweeps, work);
}

} // namespace uaamg
