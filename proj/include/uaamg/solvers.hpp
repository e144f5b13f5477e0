#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uaamg/error.hpp"
#include "uaamg/hierarchy.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/smoother.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

/// x_i += e[agg[i]].
inline void prolongate_add(const Aggregation& agg, std::span<const double> e_coarse, std::span<double> x_fine) {
  if (e_coarse.size() != agg.n_coarse() || x_fine.size() != agg.n_fine())
    throw InvalidArgument("prolongate_add: size mismatch");
  parallel_for(x_fine.size(), [&](index_t i) { x_fine[i] += e_coarse[agg[i]]; });
}

/// r_c[I] = sum of r over the members of aggregate I, in fine-index order.
inline void restrict_residual(const Aggregation& agg, std::span<const double> r_fine, std::span<double> r_coarse) {
  if (r_coarse.size() != agg.n_coarse() || r_fine.size() != agg.n_fine())
    throw InvalidArgument("restrict: size mismatch");
  parallel_for(r_coarse.size(), [&](index_t I) {
    double s = 0.0;
    for (index_t j : agg.members(I)) s += r_fine[j];
    r_coarse[I] = s;
  });
}

inline Vector restrict_residual(const Aggregation& agg, std::span<const double> r_fine) {
  Vector rc(agg.n_coarse());
  restrict_residual(agg, r_fine, rc);
  return rc;
}

struct CycleSpec {
  enum class Kind { vcycle, kcycle };

  Kind kind = Kind::kcycle;
  index_t inner_krylov_steps = 2;  ///< 0 turns the K-cycle into a V-cycle
  index_t pre_sweeps = 1;
  index_t post_sweeps = 1;

  void validate() const {
    if (pre_sweeps + post_sweeps == 0) throw InvalidArgument("cycle needs at least one smoothing sweep");
  }
};

struct SolveReport {
  index_t iterations = 0;
  std::vector<double> residual_history;  ///< relative l2 residuals, starting at 1
  bool converged = false;
  index_t restarts = 0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
};

/// Carries the report of a solve that stopped on p^T A p <= 0.
class SolverBreakdown : public NumericalError {
public:
  SolverBreakdown(const std::string& what, SolveReport report)
      : NumericalError(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

namespace detail {

struct FcgOptions {
  double tol = 0.0;          ///< relative residual target; 0 runs all iterations
  index_t max_iters = 0;
  bool singular = false;
  bool record = false;
  bool throw_on_breakdown = false;
};

/// Flexible CG from x = 0 with a one-step recurrence:
///   beta = -(z, A p_prev) / (p_prev, A p_prev), alpha = (p, r) / (p, A p).
/// After two consecutive residual increases the next direction restarts
/// from z. Returns the report; x receives the iterate.
template <class Precond>
SolveReport flexible_cg(const SparseMatrix& A, std::span<const double> b, std::span<double> x, Precond&& precond,
                        const FcgOptions& o) {
  const index_t n = A.rows();
  SolveReport rep;
  std::fill(x.begin(), x.end(), 0.0);
  Vector r(b.begin(), b.end());
  if (o.singular) remove_mean(r);
  const double bnorm = norm2(r);
  if (bnorm == 0.0) {
    rep.residual_history.push_back(0.0);
    rep.converged = true;
    return rep;
  }
  rep.residual_history.push_back(1.0);
  if (1.0 <= o.tol) {
    rep.converged = true;
    return rep;
  }
  Vector z(n), p(n), q(n), p_prev(n), q_prev(n);
  double pq_prev = 0.0;
  bool have_prev = false;
  index_t increases = 0;
  double last = 1.0;
  for (index_t it = 1; it <= o.max_iters; ++it) {
    precond(std::span<const double>(r), std::span<double>(z));
    if (o.singular) remove_mean(z);
    if (have_prev) {
      const double beta = -dot(z, q_prev) / pq_prev;
      parallel_for(n, [&](index_t i) { p[i] = z[i] + beta * p_prev[i]; });
    } else {
      p = z;
    }
    spmv(A, p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      if (o.throw_on_breakdown)
        throw SolverBreakdown("flexible CG breakdown at iteration " + std::to_string(it) + ": p^T A p <= 0", rep);
      break;
    }
    const double alpha = dot(p, r) / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    if (o.singular) remove_mean(x);
    rep.iterations = it;
    const double rel = norm2(r) / bnorm;
    if (o.record) rep.residual_history.push_back(rel);
    if (rel <= o.tol) {
      rep.converged = true;
      break;
    }
    if (rel == 0.0) break;
    increases = rel > last ? increases + 1 : 0;
    last = rel;
    if (increases >= 2) {
      have_prev = false;
      increases = 0;
      ++rep.restarts;
    } else {
      std::swap(p_prev, p);
      std::swap(q_prev, q);
      pq_prev = pq;
      have_prev = true;
    }
  }
  return rep;
}

} // namespace detail

/// Multigrid cycle over a hierarchy. Both cycle kinds start from a zero
/// initial guess, so one cycle is a (possibly nonlinear) preconditioner.
class Multigrid {
public:
  Multigrid(const Hierarchy& h, CycleSpec cycle = {}, SmootherSpec smoother = SmootherSpec::l1_jacobi())
      : h_(&h), cycle_(cycle), smoother_(smoother) {
    cycle_.validate();
    smoother_.validate();
    for (index_t l = 0; l + 1 < h.levels(); ++l) inv_diag_.push_back(smoother_inverse_diagonal(h.op(l), smoother_));
  }

  const Hierarchy& hierarchy() const { return *h_; }
  const CycleSpec& cycle_spec() const { return cycle_; }

  /// Approximate solution of A_level x = b. For singular levels b must be
  /// orthogonal to constants up to 1e-10 relative; it is projected.
  void apply(index_t level, std::span<const double> b, std::span<double> x) const {
    if (level >= h_->levels()) throw InvalidArgument("cycle: level out of range");
    const index_t n = h_->op(level).rows();
    if (b.size() != n || x.size() != n) throw InvalidArgument("cycle: size mismatch");
    if (h_->singular()) {
      Vector bp(b.begin(), b.end());
      double s = 0.0, a = 0.0;
      for (double v : bp) {
        s += v;
        a += std::abs(v);
      }
      if (std::abs(s) > 1e-10 * a) throw NumericalError("cycle: right-hand side not in the range of a singular operator");
      remove_mean(bp);
      run(level, bp, x);
      return;
    }
    run(level, b, x);
  }

  /// Fine-level cycle as a preconditioner: residuals of a singular system
  /// carry a rounding-level mean, which is projected out without a check.
  void precondition(std::span<const double> r, std::span<double> z) const {
    if (!h_->singular()) {
      run(0, r, z);
      return;
    }
    Vector rp(r.begin(), r.end());
    remove_mean(rp);
    run(0, rp, z);
  }

  Vector apply(index_t level, std::span<const double> b) const {
    Vector x(b.size());
    apply(level, b, x);
    return x;
  }

private:
  void run(index_t l, std::span<const double> b, std::span<double> x) const {
    const index_t last = h_->levels() - 1;
    if (l == last) {
      h_->coarse_solver().solve(b, x);
      return;
    }
    const SparseMatrix& A = h_->op(l);
    const Aggregation& agg = h_->aggregation(l);
    const index_t n = A.rows();
    Vector work(n);
    std::fill(x.begin(), x.end(), 0.0);
    smooth(A, inv_diag_[l], x, b, cycle_.pre_sweeps, work);
    residual(A, x, b, work);
    Vector rc = restrict_residual(agg, work);
    if (h_->singular()) remove_mean(rc);
    Vector ec(rc.size());
    if (l + 1 == last || cycle_.kind == CycleSpec::Kind::vcycle || cycle_.inner_krylov_steps == 0) {
      run(l + 1, rc, ec);
    } else {
      detail::FcgOptions o;
      o.max_iters = cycle_.inner_krylov_steps;
      o.singular = h_->singular();
      detail::flexible_cg(h_->op(l + 1), rc, ec,
                          [&](std::span<const double> r, std::span<double> z) { run(l + 1, r, z); }, o);
    }
    prolongate_add(agg, ec, x);
    smooth(A, inv_diag_[l], x, b, cycle_.post_sweeps, work);
  }

  const Hierarchy* h_;
  CycleSpec cycle_;
  SmootherSpec smoother_;
  std::vector<Vector> inv_diag_;
};

inline Vector cycle(const Hierarchy& h, const CycleSpec& spec, const SmootherSpec& smoother, index_t level,
                    std::span<const double> b) {
  return Multigrid(h, spec, smoother).apply(level, b);
}

/// Flexible preconditioned CG with one multigrid cycle per iteration.
/// Stops when ||r|| / ||b|| <= tol or after max_iters. Singular systems are
/// solved on the complement of constants and return a zero-mean solution.
inline SolveReport npcg_solve(const Multigrid& mg, std::span<const double> b, std::span<double> x, double tol,
                              index_t max_iters) {
  if (!(tol > 0.0)) throw InvalidArgument("npcg_solve: tol must be positive");
  const Hierarchy& h = mg.hierarchy();
  const SparseMatrix& A = h.op(0);
  if (b.size() != A.rows() || x.size() != A.rows()) throw InvalidArgument("npcg_solve: size mismatch");
  if (h.singular()) {
    double s = 0.0, a = 0.0;
    for (double v : b) {
      s += v;
      a += std::abs(v);
    }
    if (std::abs(s) > 1e-10 * a) throw NumericalError("npcg_solve: right-hand side not in the range of a singular operator");
  }
  detail::FcgOptions o;
  o.tol = tol;
  o.max_iters = max_iters;
  o.singular = h.singular();
  o.record = true;
  o.throw_on_breakdown = true;
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep = detail::flexible_cg(
      A, b, x, [&](std::span<const double> r, std::span<double> z) { mg.precondition(r, z); }, o);
  rep.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline SolveReport npcg_solve(const Hierarchy& h, const CycleSpec& spec, const SmootherSpec& smoother,
                              std::span<const double> b, std::span<double> x, double tol, index_t max_iters) {
  return npcg_solve(Multigrid(h, spec, smoother), b, x, tol, max_iters);
}

} // namespace uaamg
