#pragma once

#include <algorithm>
#include <cmath>

// threading stays in the library's fixed-block kernels so results do not
// depend on the thread count
#ifndef EIGEN_DONT_PARALLELIZE
#define EIGEN_DONT_PARALLELIZE
#endif
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "uaamg/error.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/smoother.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

inline DenseMatrix to_dense(const SparseMatrix& A) {
  DenseMatrix D = DenseMatrix::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  for (index_t i = 0; i < A.rows(); ++i) {
    const auto cols = A.row_cols(i);
    const auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) = vals[k];
  }
  return D;
}

inline Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& A) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A.nnz());
  for (index_t i = 0; i < A.rows(); ++i) {
    const auto cols = A.row_cols(i);
    const auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      t.emplace_back(static_cast<int>(i), static_cast<int>(cols[k]), vals[k]);
  }
  Eigen::SparseMatrix<double> E(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  E.setFromTriplets(t.begin(), t.end());
  return E;
}

/// Dense boolean prolongator.
inline DenseMatrix dense_prolongator(const Aggregation& agg) {
  DenseMatrix P = DenseMatrix::Zero(static_cast<Eigen::Index>(agg.n_fine()),
                                    static_cast<Eigen::Index>(agg.n_coarse()));
  for (index_t i = 0; i < agg.n_fine(); ++i)
    P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(agg[i])) = 1.0;
  return P;
}

/// n x (n-1) matrix with orthonormal columns spanning the complement of the
/// constant vector (columns 2..n of the Householder reflector that maps e_1
/// onto 1/sqrt(n)).
inline DenseMatrix constant_complement_basis(Eigen::Index n) {
  DenseVector u = DenseVector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  u(0) -= 1.0;
  const double nu = u.squaredNorm();
  DenseMatrix H = DenseMatrix::Identity(n, n);
  if (nu > 0.0) H -= (2.0 / nu) * u * u.transpose();
  return H.rightCols(n - 1);
}

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition;
/// eigenvalues below rel_tol * max|lambda| are treated as zero.
inline DenseMatrix symmetric_pseudo_inverse(const DenseMatrix& A, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(A);
  const DenseVector& lam = es.eigenvalues();
  const double cut = rel_tol * lam.cwiseAbs().maxCoeff();
  DenseVector inv = DenseVector::Zero(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (std::abs(lam(k)) > cut) inv(k) = 1.0 / lam(k);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Drops row and column 0. On a Laplacian with null space span{1} this gives
/// an SPD matrix whose quotients agree with those on the complement of 1:
/// |v|_A and |op v|_A are unchanged by adding constants when op maps
/// constants to constants.
inline DenseMatrix grounded(const DenseMatrix& M) { return M.bottomRightCorner(M.rows() - 1, M.cols() - 1); }

/// Operator norm of `op` in the A-(semi)norm on V, where V = R^n for SPD A
/// and V = 1-perp when A is singular with null space span{1}. `op` must map
/// constants to constants (or to zero) in the singular case.
inline double energy_norm(const DenseMatrix& A, const DenseMatrix& op, bool singular) {
  if (singular && A.rows() == 1) return 0.0;
  DenseMatrix Ap, opz;
  if (singular) {
    // op on {x : x_0 = 0}: apply op, then shift by the constant that zeroes entry 0
    DenseMatrix shifted = op;
    for (Eigen::Index j = 0; j < op.cols(); ++j) shifted.col(j).array() -= op(0, j);
    Ap = grounded(A);
    opz = grounded(shifted);
  } else {
    Ap = A;
    opz = op;
  }
  Eigen::LLT<DenseMatrix> llt(Ap);
  if (llt.info() != Eigen::Success) throw NumericalError("energy_norm: A is not positive definite on V");
  const DenseMatrix L = llt.matrixL();
  // X = L^T opz L^{-T}
  DenseMatrix X = L.transpose() * opz;
  X = L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(X.transpose() * X, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Dense error propagator of `sweeps` relaxation steps, S = (I - M^{-1} A)^sweeps.
inline DenseMatrix dense_smoother_propagator(const DenseMatrix& A, const SmootherSpec& spec) {
  spec.validate();
  const Eigen::Index n = A.rows();
  DenseVector inv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
    const double m = spec.kind == SmootherSpec::Kind::l1_jacobi ? A(i, i) + off : A(i, i) / spec.omega;
    if (!(m > 0.0)) throw NumericalError("smoother: zero or negative M_ii");
    inv(i) = 1.0 / m;
  }
  const DenseMatrix S1 = DenseMatrix::Identity(n, n) - inv.asDiagonal() * A;
  DenseMatrix S = DenseMatrix::Identity(n, n);
  for (index_t s = 0; s < spec.sweeps; ++s) S = S1 * S;
  return S;
}

} // namespace uaamg
