#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uaamg/error.hpp"
#include "uaamg/parallel.hpp"

namespace uaamg {

using index_t = std::size_t;
using Vector = std::vector<double>;

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

/// Compressed-row sparse matrix in canonical form: strictly increasing
/// column indices within each row and no stored zeros.
class SparseMatrix {
public:
  SparseMatrix() : row_offsets_(1, 0) {}

  /// Takes ownership of CSR arrays and checks the canonical-form invariants.
  SparseMatrix(index_t n_rows, index_t n_cols, std::vector<index_t> row_offsets,
               std::vector<index_t> col_indices, std::vector<double> values)
      : n_rows_(n_rows), n_cols_(n_cols), row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)), values_(std::move(values)) {
    validate();
  }

  /// Builds a canonical matrix from unordered triplets. Duplicates are summed
  /// and entries that cancel to zero are dropped.
  static SparseMatrix from_triplets(index_t n_rows, index_t n_cols,
                                    std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= n_rows || t.col >= n_cols)
        throw InvalidArgument("triplet index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<index_t> offsets(n_rows + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size();) {
      const index_t r = entries[k].row;
      const index_t c = entries[k].col;
      double sum = 0.0;
      for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k)
        sum += entries[k].value;
      if (sum != 0.0) {
        cols.push_back(c);
        vals.push_back(sum);
        ++offsets[r + 1];
      }
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
  }

  static SparseMatrix identity(index_t n) {
    std::vector<index_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), index_t{0});
    std::vector<index_t> cols(n);
    std::iota(cols.begin(), cols.end(), index_t{0});
    return SparseMatrix(n, n, std::move(offsets), std::move(cols), Vector(n, 1.0));
  }

  index_t rows() const { return n_rows_; }
  index_t cols() const { return n_cols_; }
  index_t nnz() const { return col_indices_.size(); }
  bool square() const { return n_rows_ == n_cols_; }

  std::span<const index_t> row_offsets() const { return row_offsets_; }
  std::span<const index_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const index_t> row_cols(index_t i) const {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::span<const double> row_values(index_t i) const {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  /// Entry lookup by binary search; zero when not stored.
  double operator()(index_t i, index_t j) const {
    const auto cols = row_cols(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + static_cast<index_t>(it - cols.begin())];
  }

  Vector diagonal() const {
    Vector d(std::min(n_rows_, n_cols_), 0.0);
    for (index_t i = 0; i < d.size(); ++i) d[i] = (*this)(i, i);
    return d;
  }

  /// Number of stored off-diagonal entries in row i (the vertex degree for
  /// a graph Laplacian).
  index_t off_diagonal_count(index_t i) const {
    const auto cols = row_cols(i);
    return cols.size() - static_cast<index_t>(std::binary_search(cols.begin(), cols.end(), i));
  }

  /// Largest absolute row sum.
  double norm_inf() const {
    double m = 0.0;
    for (index_t i = 0; i < n_rows_; ++i) {
      double s = 0.0;
      for (double v : row_values(i)) s += std::abs(v);
      m = std::max(m, s);
    }
    return m;
  }

  bool is_symmetric(double tol = 0.0) const {
    if (!square()) return false;
    for (index_t i = 0; i < n_rows_; ++i) {
      const auto cols = row_cols(i);
      const auto vals = row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k)
        if (std::abs(vals[k] - (*this)(cols[k], i)) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
  void validate() const {
    if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0)
      throw InvalidArgument("row_offsets must have n_rows+1 entries starting at 0");
    if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size())
      throw InvalidArgument("row_offsets/col_indices/values lengths disagree");
    for (index_t i = 0; i < n_rows_; ++i) {
      if (row_offsets_[i] > row_offsets_[i + 1])
        throw InvalidArgument("row_offsets must be nondecreasing");
      for (index_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] >= n_cols_) throw InvalidArgument("column index out of range");
        if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
          throw InvalidArgument("column indices must be strictly increasing within a row");
      }
    }
  }

  index_t n_rows_ = 0;
  index_t n_cols_ = 0;
  std::vector<index_t> row_offsets_;
  std::vector<index_t> col_indices_;
  Vector values_;
};

/// y = A x. Each row is accumulated sequentially in column order, so the
/// result is bit-identical for any thread count.
inline void spmv(const SparseMatrix& A, std::span<const double> x, std::span<double> y) {
  if (x.size() != A.cols() || y.size() != A.rows())
    throw InvalidArgument("spmv: dimension mismatch");
  const auto offsets = A.row_offsets();
  const auto cols = A.col_indices();
  const auto vals = A.values();
  parallel_for(A.rows(), [&](index_t i) {
    double s = 0.0;
    for (index_t k = offsets[i]; k < offsets[i + 1]; ++k) s += vals[k] * x[cols[k]];
    y[i] = s;
  });
}

inline Vector spmv(const SparseMatrix& A, std::span<const double> x) {
  Vector y(A.rows());
  spmv(A, x, y);
  return y;
}

/// r = b - A x.
inline void residual(const SparseMatrix& A, std::span<const double> x,
                     std::span<const double> b, std::span<double> r) {
  spmv(A, x, r);
  parallel_for(r.size(), [&](index_t i) { r[i] = b[i] - r[i]; });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  parallel_for(x.size(), [&](std::size_t i) { y[i] += alpha * x[i]; });
}

/// Removes the mean so that x is orthogonal to the constant vector.
inline void remove_mean(std::span<double> x) {
  if (x.empty()) return;
  const double mean =
      deterministic_sum(x.size(), [&](std::size_t i) { return x[i]; }) / static_cast<double>(x.size());
  parallel_for(x.size(), [&](std::size_t i) { x[i] -= mean; });
}

/// Structural pattern of A*A: all (i, j) with graph distance at most 2,
/// self included. Values are set to 1.
inline SparseMatrix squared_adjacency_pattern(const SparseMatrix& A) {
  if (!A.square()) throw InvalidArgument("squared_adjacency_pattern: matrix is not square");
  const index_t n = A.rows();
  std::vector<std::vector<index_t>> rows(n);
  parallel_for(n, [&](index_t i) {
    std::vector<index_t>& row = rows[i];
    row.push_back(i);
    for (index_t j : A.row_cols(i)) {
      row.push_back(j);
      for (index_t k : A.row_cols(j)) row.push_back(k);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  });
  std::vector<index_t> offsets(n + 1, 0);
  for (index_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + rows[i].size();
  std::vector<index_t> cols(offsets.back());
  for (index_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), cols.begin() + offsets[i]);
  Vector vals(cols.size(), 1.0);
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// Graph problems

struct Edge {
  index_t i;
  index_t j;
  double weight;
};

struct BoundaryWeight {
  index_t vertex;
  double weight;
};

/// Weighted undirected graph plus boundary weights. The associated bilinear
/// form is sum_edges w_ij (u_i - u_j)(v_i - v_j) + sum_S wD_j u_j v_j.
class GraphProblem {
public:
  GraphProblem() = default;

  /// Normalizes every edge to i < j and rejects self-loops, duplicate edges,
  /// duplicate boundary entries and non-positive weights.
  GraphProblem(index_t n, std::vector<Edge> edges, std::vector<BoundaryWeight> boundary)
      : n_(n), edges_(std::move(edges)), boundary_(std::move(boundary)) {
    for (auto& e : edges_) {
      if (e.i >= n_ || e.j >= n_) throw InvalidArgument("edge endpoint out of range");
      if (e.i == e.j) throw InvalidArgument("self-loop at vertex " + std::to_string(e.i));
      if (!(e.weight > 0.0)) throw InvalidArgument("edge weight must be positive");
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::vector<std::pair<index_t, index_t>> keys;
    keys.reserve(edges_.size());
    for (const auto& e : edges_) keys.emplace_back(e.i, e.j);
    std::sort(keys.begin(), keys.end());
    if (const auto it = std::adjacent_find(keys.begin(), keys.end()); it != keys.end())
      throw InvalidArgument("duplicate edge (" + std::to_string(it->first) + ", " +
                            std::to_string(it->second) + ")");
    std::vector<index_t> bverts;
    for (const auto& b : boundary_) {
      if (b.vertex >= n_) throw InvalidArgument("boundary vertex out of range");
      if (!(b.weight > 0.0)) throw InvalidArgument("boundary weight must be positive");
      bverts.push_back(b.vertex);
    }
    std::sort(bverts.begin(), bverts.end());
    if (std::adjacent_find(bverts.begin(), bverts.end()) != bverts.end())
      throw InvalidArgument("duplicate boundary vertex");
  }

  index_t n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<BoundaryWeight>& boundary() const { return boundary_; }
  /// Pure Neumann problem: the Laplacian annihilates the constant vector.
  bool singular() const { return boundary_.empty(); }

private:
  index_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<BoundaryWeight> boundary_;
};

inline SparseMatrix assemble_laplacian(const GraphProblem& p) {
  std::vector<Triplet> t;
  t.reserve(4 * p.edges().size() + p.boundary().size() + p.n());
  Vector diag(p.n(), 0.0);
  for (const auto& e : p.edges()) {
    t.push_back({e.i, e.j, -e.weight});
    t.push_back({e.j, e.i, -e.weight});
    diag[e.i] += e.weight;
    diag[e.j] += e.weight;
  }
  for (const auto& b : p.boundary()) diag[b.vertex] += b.weight;
  for (index_t i = 0; i < p.n(); ++i)
    if (diag[i] != 0.0) t.push_back({i, i, diag[i]});
  return SparseMatrix::from_triplets(p.n(), p.n(), std::move(t));
}

enum class BoundaryCondition { dirichlet, neumann };

struct Anisotropy {
  double horizontal = 1.0;
  double vertical = 1.0;
};

/// n x n lattice, vertex (r, c) numbered r*n + c. Dirichlet boundaries are
/// eliminated: each vertex gets a boundary weight equal to the weights of its
/// missing off-grid edges (5-point stencil).
inline GraphProblem generate_structured_grid(index_t n, BoundaryCondition bc,
                                             Anisotropy w = {}) {
  if (n < 2) throw InvalidArgument("structured grid needs n >= 2");
  if (!(w.horizontal > 0.0) || !(w.vertical > 0.0))
    throw InvalidArgument("anisotropy weights must be positive");
  std::vector<Edge> edges;
  edges.reserve(2 * n * (n - 1));
  std::vector<BoundaryWeight> boundary;
  for (index_t r = 0; r < n; ++r) {
    for (index_t c = 0; c < n; ++c) {
      const index_t i = r * n + c;
      if (c + 1 < n) edges.push_back({i, i + 1, w.horizontal});
      if (r + 1 < n) edges.push_back({i, i + n, w.vertical});
      if (bc == BoundaryCondition::dirichlet) {
        const double wd = w.horizontal * ((c == 0) + (c == n - 1)) +
                          w.vertical * ((r == 0) + (r == n - 1));
        if (wd > 0.0) boundary.push_back({i, wd});
      }
    }
  }
  return GraphProblem(n * n, std::move(edges), std::move(boundary));
}

/// True when every row sum vanishes (relative to the largest diagonal), i.e.
/// the constant vector is in the null space.
inline bool annihilates_constants(const SparseMatrix& A, double rel_tol = 1e-12) {
  double scale = 0.0;
  for (double d : A.diagonal()) scale = std::max(scale, std::abs(d));
  if (scale == 0.0) return true;
  for (index_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (double v : A.row_values(i)) s += v;
    if (std::abs(s) > rel_tol * scale) return false;
  }
  return true;
}

} // namespace uaamg
