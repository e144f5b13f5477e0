#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uaamg/aggregation.hpp"
#include "uaamg/dense.hpp"
#include "uaamg/error.hpp"
#include "uaamg/galerkin.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/reshaping.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

struct HierarchyConfig {
  index_t coarsest_size = 100;  ///< n0: stop once a level has at most this many unknowns
  index_t max_levels = 20;      ///< L: total number of levels, finest included
  AggregationConfig aggregation;
  index_t reshape_sweeps = 0;
  ReshapeOptions reshape;       ///< `sweeps` is overridden by reshape_sweeps
  /// Null space flag; detected from A (A 1 = 0) when empty.
  std::optional<bool> singular;

  void validate() const {
    if (coarsest_size < 1) throw InvalidArgument("coarsest size must be >= 1");
    if (max_levels < 1) throw InvalidArgument("max_levels must be >= 1");
    aggregation.validate();
  }
};

/// Direct solver for the coarsest level: Cholesky when SPD, otherwise the
/// pseudo-inverse (null space span{1} is deflated).
class CoarseSolver {
public:
  CoarseSolver() = default;
  CoarseSolver(const SparseMatrix& A, bool singular) : singular_(singular), n_(A.rows()) {
    const DenseMatrix D = to_dense(A);
    if (singular_) {
      pinv_ = symmetric_pseudo_inverse(D);
    } else {
      llt_.compute(D);
      if (llt_.info() != Eigen::Success) throw NumericalError("coarsest matrix is not positive definite");
    }
  }

  index_t size() const { return n_; }
  bool singular() const { return singular_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    if (b.size() != n_ || x.size() != n_) throw InvalidArgument("CoarseSolver: size mismatch");
    const Eigen::Map<const DenseVector> bm(b.data(), static_cast<Eigen::Index>(n_));
    Eigen::Map<DenseVector> xm(x.data(), static_cast<Eigen::Index>(n_));
    if (singular_) {
      const DenseVector bp = bm.array() - bm.mean();
      xm = pinv_ * bp;
      xm.array() -= xm.mean();
    } else {
      xm = llt_.solve(bm);
    }
  }

private:
  bool singular_ = false;
  index_t n_ = 0;
  Eigen::LLT<DenseMatrix> llt_;
  DenseMatrix pinv_;
};

/// Levels finest (0) to coarsest. aggregation(l) maps level l onto l + 1.
class Hierarchy {
public:
  index_t levels() const { return ops_.size(); }
  const SparseMatrix& op(index_t l) const { return ops_.at(l); }
  const Aggregation& aggregation(index_t l) const { return aggs_.at(l); }
  const CoarseSolver& coarse_solver() const { return coarse_; }
  bool singular() const { return singular_; }

  double grid_complexity() const {
    double s = 0.0;
    for (const auto& A : ops_) s += static_cast<double>(A.rows());
    return s / static_cast<double>(ops_.front().rows());
  }
  double operator_complexity() const {
    double s = 0.0;
    for (const auto& A : ops_) s += static_cast<double>(A.nnz());
    return ops_.front().nnz() == 0 ? 1.0 : s / static_cast<double>(ops_.front().nnz());
  }

  friend bool operator==(const Hierarchy& a, const Hierarchy& b) {
    return a.ops_ == b.ops_ && a.aggs_ == b.aggs_ && a.singular_ == b.singular_;
  }

private:
  std::vector<SparseMatrix> ops_;
  std::vector<Aggregation> aggs_;
  CoarseSolver coarse_;
  bool singular_ = false;

  friend Hierarchy setup(const SparseMatrix& A, const HierarchyConfig& cfg);
};

/// Builds levels by aggregation, optional reshaping and Galerkin products
/// until a level has at most n0 unknowns or L levels exist. Level l uses
/// aggregation seed cfg.aggregation.seed + l.
inline Hierarchy setup(const SparseMatrix& A, const HierarchyConfig& cfg) {
  cfg.validate();
  if (!A.square() || A.rows() == 0) throw InvalidArgument("setup: matrix must be square and nonempty");
  Hierarchy h;
  h.singular_ = cfg.singular ? *cfg.singular : annihilates_constants(A);
  h.ops_.push_back(A);
  while (h.ops_.back().rows() > cfg.coarsest_size && h.ops_.size() < cfg.max_levels) {
    const index_t l = h.ops_.size() - 1;
    const SparseMatrix& Al = h.ops_.back();
    AggregationConfig ac = cfg.aggregation;
    ac.seed = cfg.aggregation.seed + l;
    Aggregation agg = aggregate(Al, ac);
    if (cfg.reshape_sweeps > 0) {
      ReshapeOptions ro = cfg.reshape;
      ro.sweeps = cfg.reshape_sweeps;
      agg = reshape_sweep(Al, agg, ro);
    }
    if (agg.n_coarse() == Al.rows())
      throw NumericalError("aggregation stagnated at level " + std::to_string(l) + " (" +
                           std::to_string(Al.rows()) + " unknowns)");
    SparseMatrix Ac = galerkin_coarse(Al, agg);
    h.aggs_.push_back(std::move(agg));
    h.ops_.push_back(std::move(Ac));
  }
  h.coarse_ = CoarseSolver(h.ops_.back(), h.singular_);
  return h;
}

} // namespace uaamg
