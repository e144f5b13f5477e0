#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uaamg/dense.hpp"
#include "uaamg/error.hpp"
#include "uaamg/galerkin.hpp"
#include "uaamg/hierarchy.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/smoother.hpp"
#include "uaamg/solvers.hpp"
#include "uaamg/sparse.hpp"

#include <Eigen/SparseCholesky>

namespace uaamg {

struct EnergyNormOptions {
  index_t dense_limit = 4096;      ///< dense eigensolve up to this size
  index_t max_iterations = 500;    ///< power iteration budget
  double rel_change = 1e-5;        ///< power iteration stopping test
  std::uint64_t seed = 20120501;   ///< start vector
};

/// (Q x)_i = mean of x over the aggregate containing i.
inline void aggregate_average(const Aggregation& agg, std::span<const double> x, std::span<double> y) {
  Vector avg(agg.n_coarse());
  restrict_residual(agg, x, avg);
  parallel_for(avg.size(), [&](index_t I) { avg[I] /= static_cast<double>(agg.agg_sizes()[I]); });
  parallel_for(y.size(), [&](index_t i) { y[i] = avg[agg[i]]; });
}

/// Dense Q = P (P^T P)^{-1} P^T.
inline DenseMatrix dense_l2_projection(const Aggregation& agg) {
  const DenseMatrix P = dense_prolongator(agg);
  DenseVector inv(P.cols());
  for (Eigen::Index j = 0; j < P.cols(); ++j) inv(j) = 1.0 / static_cast<double>(agg.agg_sizes()[static_cast<index_t>(j)]);
  return P * inv.asDiagonal() * P.transpose();
}

/// ||Q||_A^2 from dense factorizations, grounded at vertex 0 when A is
/// singular. Q A Q = P C P^T with C = D^{-1} P^T A P D^{-1}, D = P^T P, so the
/// nonzero spectrum of (Q A Q, A) is that of C G with G = P^T A^{-1} P. With
/// G = L L^T this is the symmetric nc x nc matrix L^T C L.
inline double q_energy_norm_dense(const DenseMatrix& A, const Aggregation& agg, bool singular) {
  if (static_cast<index_t>(A.rows()) != agg.n_fine()) throw InvalidArgument("q_energy_norm: size mismatch");
  if (singular && A.rows() == 1) return 1.0;
  const index_t n = agg.n_fine();
  const index_t off = singular ? 1 : 0;
  // grounding removes the column of an aggregate that is {0} alone
  std::vector<Eigen::Index> col(agg.n_coarse(), -1);
  Eigen::Index k = 0;
  for (index_t I = 0; I < agg.n_coarse(); ++I)
    if (agg.agg_sizes()[I] > (singular && agg[0] == I ? 1u : 0u)) col[I] = k++;
  if (k == 0) return 0.0;

  const auto m = static_cast<Eigen::Index>(n - off);
  const Eigen::SparseMatrix<double> Ag = A.bottomRightCorner(m, m).sparseView();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Ag);
  if (ldlt.info() != Eigen::Success) throw NumericalError("q_energy_norm: factorization failed");
  DenseMatrix Pg = DenseMatrix::Zero(m, k);
  for (index_t i = off; i < n; ++i) Pg(static_cast<Eigen::Index>(i - off), col[agg[i]]) = 1.0;
  const DenseMatrix X = ldlt.solve(Pg);
  DenseMatrix G = DenseMatrix::Zero(k, k);
  for (index_t i = off; i < n; ++i) G.row(col[agg[i]]) += X.row(static_cast<Eigen::Index>(i - off));
  G = (0.5 * (G + G.transpose())).eval();
  const Eigen::LLT<DenseMatrix> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("q_energy_norm: P^T A^{-1} P is not positive definite");

  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double a = A(i, j);
      if (a == 0.0) continue;
      const index_t I = agg[static_cast<index_t>(i)], J = agg[static_cast<index_t>(j)];
      if (col[I] < 0 || col[J] < 0) continue;
      const double s = static_cast<double>(agg.agg_sizes()[I]) * static_cast<double>(agg.agg_sizes()[J]);
      trips.emplace_back(col[I], col[J], a / s);
    }
  Eigen::SparseMatrix<double> C(k, k);
  C.setFromTriplets(trips.begin(), trips.end());
  const DenseMatrix L = llt.matrixL();
  const DenseMatrix CL = C * L;
  const DenseMatrix H = L.transpose() * CL;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("q_energy_norm: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

namespace detail {

/// Sparse LDL^T of A, grounded at vertex 0 when singular; solve() returns a
/// zero-mean solution in that case.
class EnergySolver {
public:
  EnergySolver(const SparseMatrix& A, bool singular) : singular_(singular), n_(A.rows()) {
    if (singular_ && n_ == 1) return;
    Eigen::SparseMatrix<double> E = to_eigen(A);
    if (singular_) E = E.bottomRightCorner(E.rows() - 1, E.cols() - 1);
    ldlt_.compute(E);
    if (ldlt_.info() != Eigen::Success) throw NumericalError("sparse factorization failed");
  }

  void solve(std::span<const double> b, std::span<double> x) const {
    if (singular_ && n_ == 1) {
      x[0] = 0.0;
      return;
    }
    const auto off = singular_ ? 1 : 0;
    const Eigen::Map<const DenseVector> bm(b.data() + off, static_cast<Eigen::Index>(n_ - off));
    const DenseVector y = ldlt_.solve(bm);
    if (singular_) x[0] = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) x[static_cast<std::size_t>(k + off)] = y(k);
    if (singular_) remove_mean(x);
  }

private:
  bool singular_;
  index_t n_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

inline Vector seeded_start(index_t n, std::uint64_t seed, bool singular) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  if (singular) remove_mean(v);
  return v;
}

/// Largest eigenvalue of an A-self-adjoint, A-semidefinite operator B by
/// power iteration: lambda = (A B v, v) / (A v, v).
template <class Apply>
double power_iteration(const SparseMatrix& A, Apply&& B, bool singular, const EnergyNormOptions& o) {
  const index_t n = A.rows();
  Vector v = seeded_start(n, o.seed, singular);
  Vector w(n), Av(n);
  double lambda = 0.0;
  for (index_t it = 0; it < o.max_iterations; ++it) {
    spmv(A, v, Av);
    const double vv = dot(v, Av);
    if (!(vv > 0.0)) return 0.0;
    B(std::span<const double>(v), std::span<double>(w));
    if (singular) remove_mean(w);
    const double next = dot(w, Av) / vv;
    const double scale = 1.0 / std::sqrt(vv);
    const bool done = it > 0 && std::abs(next - lambda) <= o.rel_change * std::abs(next);
    lambda = next;
    if (done) break;
    parallel_for(n, [&](index_t i) { v[i] = w[i] * scale; });
  }
  return lambda;
}

} // namespace detail

/// ||Q||_A^2 by power iteration on A^{-1} Q A Q.
inline double q_energy_norm_power(const SparseMatrix& A, const Aggregation& agg, bool singular,
                                  const EnergyNormOptions& o = {}) {
  if (A.rows() != agg.n_fine()) throw InvalidArgument("q_energy_norm: size mismatch");
  const detail::EnergySolver solver(A, singular);
  const index_t n = A.rows();
  Vector t1(n), t2(n);
  return detail::power_iteration(
      A,
      [&](std::span<const double> v, std::span<double> w) {
        aggregate_average(agg, v, t1);
        spmv(A, t1, t2);
        aggregate_average(agg, t2, t1);
        solver.solve(t1, w);
      },
      singular, o);
}

/// ||Q||_A^2 = sup over V of |Q v|_A^2 / |v|_A^2 with Q the l2 projection
/// onto piecewise constants; V is the complement of constants if singular.
inline double q_energy_norm(const SparseMatrix& A, const Aggregation& agg, bool singular,
                            const EnergyNormOptions& o = {}) {
  if (agg.n_coarse() == agg.n_fine()) return 1.0;
  if (A.rows() <= o.dense_limit) return q_energy_norm_dense(to_dense(A), agg, singular);
  return q_energy_norm_power(A, agg, singular, o);
}

/// Dense E = S (I - pi) S with pi = P (P^T A P)^+ P^T A, S the smoother
/// propagator (the same on both sides).
inline DenseMatrix dense_two_level_operator(const DenseMatrix& A, const Aggregation& agg, const SmootherSpec& smoother) {
  const DenseMatrix P = dense_prolongator(agg);
  const DenseMatrix Ac = P.transpose() * A * P;
  const DenseMatrix pi = P * symmetric_pseudo_inverse(Ac) * P.transpose() * A;
  const DenseMatrix S = dense_smoother_propagator(A, smoother);
  const auto n = A.rows();
  return S * (DenseMatrix::Identity(n, n) - pi) * S;
}

inline double two_level_rate_dense(const DenseMatrix& A, const Aggregation& agg, const SmootherSpec& smoother,
                                   bool singular) {
  return energy_norm(A, dense_two_level_operator(A, agg, smoother), singular);
}

/// |E|_A by power iteration with sparse kernels and a factorized coarse operator.
inline double two_level_rate_power(const SparseMatrix& A, const Aggregation& agg, const SmootherSpec& smoother,
                                   bool singular, const EnergyNormOptions& o = {}) {
  const SparseMatrix Ac = galerkin_coarse(A, agg);
  const detail::EnergySolver coarse(Ac, singular);
  const Vector inv = smoother_inverse_diagonal(A, smoother);
  const index_t n = A.rows();
  Vector zero(n, 0.0), work(n), r(n), rc(agg.n_coarse()), ec(agg.n_coarse());
  return detail::power_iteration(
      A,
      [&](std::span<const double> v, std::span<double> w) {
        // smoothing an error e: e <- e - M^{-1} A e, i.e. relaxation on A e = 0
        std::copy(v.begin(), v.end(), w.begin());
        smooth(A, inv, w, zero, smoother.sweeps, work);
        spmv(A, w, r);
        restrict_residual(agg, r, rc);
        coarse.solve(rc, ec);
        parallel_for(n, [&](index_t i) { w[i] -= ec[agg[i]]; });
        smooth(A, inv, w, zero, smoother.sweeps, work);
      },
      singular, o);
}

/// Energy norm of the two-level error propagator with pre- and post-smoothing.
inline double two_level_rate(const SparseMatrix& A, const Aggregation& agg, const SmootherSpec& smoother,
                             bool singular, const EnergyNormOptions& o = {}) {
  if (A.rows() <= o.dense_limit) return two_level_rate_dense(to_dense(A), agg, smoother, singular);
  return two_level_rate_power(A, agg, smoother, singular, o);
}

struct TwoLevelReport {
  index_t fine_level = 0;
  index_t coarse_level = 0;
  double coarsening_ratio = 1.0;
  double q_energy_sq = 1.0;
  std::optional<double> e_norm;
};

struct ReportOptions {
  EnergyNormOptions energy;
  index_t e_norm_limit = 1024;  ///< |E|_A only for fine levels up to this size
  SmootherSpec smoother = SmootherSpec::l1_jacobi();
};

/// Ratio and ||Q||_A^2 between every pair of levels l < l'; rows ordered by
/// (l, l').
inline std::vector<TwoLevelReport> hierarchy_report(const Hierarchy& h, const ReportOptions& o = {}) {
  std::vector<std::pair<index_t, index_t>> slots;
  for (index_t l = 0; l + 1 < h.levels(); ++l)
    for (index_t m = l + 1; m < h.levels(); ++m) slots.emplace_back(l, m);
  std::vector<TwoLevelReport> rows(slots.size());
  parallel_for(slots.size(), [&](index_t k) {
    const auto [l, m] = slots[k];
    Aggregation agg = h.aggregation(l);
    for (index_t j = l + 1; j < m; ++j) agg = compose(agg, h.aggregation(j));
    TwoLevelReport& r = rows[k];
    r.fine_level = l;
    r.coarse_level = m;
    r.coarsening_ratio = agg.coarsening_ratio();
    r.q_energy_sq = q_energy_norm(h.op(l), agg, h.singular(), o.energy);
    if (h.op(l).rows() <= o.e_norm_limit) r.e_norm = two_level_rate(h.op(l), agg, o.smoother, h.singular(), o.energy);
  });
  return rows;
}

inline std::string reports_to_csv(const std::vector<TwoLevelReport>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "fine,coarse,ratio,q_energy_sq,e_norm\n";
  for (const auto& r : rows) {
    os << r.fine_level << ',' << r.coarse_level << ',' << r.coarsening_ratio << ',' << r.q_energy_sq << ',';
    if (r.e_norm) os << *r.e_norm;
    os << '\n';
  }
  return os.str();
}

} // namespace uaamg
