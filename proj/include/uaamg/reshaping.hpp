#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "uaamg/dense.hpp"
#include "uaamg/error.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/smoother.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

/// The union of two neighbouring aggregates as a standalone Neumann problem.
struct LocalPairProblem {
  DenseMatrix laplacian;          ///< weighted graph Laplacian of the union
  std::vector<index_t> members;   ///< global ids, increasing
  std::vector<int> side;          ///< 1 or 2 per member
  bool singular = true;
};

/// Laplacian of the subgraph induced by `members`, with weights -a_ij and
/// the diagonal restoring zero row sums.
inline DenseMatrix local_laplacian(const SparseMatrix& A, std::span<const index_t> members) {
  const auto n = static_cast<Eigen::Index>(members.size());
  DenseMatrix L = DenseMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto cols = A.row_cols(members[static_cast<std::size_t>(k)]);
    const auto vals = A.row_values(members[static_cast<std::size_t>(k)]);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const auto it = std::lower_bound(members.begin(), members.end(), cols[e]);
      if (it == members.end() || *it != cols[e]) continue;
      const auto l = static_cast<Eigen::Index>(it - members.begin());
      if (l != k) L(k, l) = vals[e];
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) L(k, k) = -L.row(k).sum();
  return L;
}

inline LocalPairProblem make_pair_problem(const SparseMatrix& A, const Aggregation& agg, index_t I,
                                          index_t J) {
  if (I == J || I >= agg.n_coarse() || J >= agg.n_coarse())
    throw InvalidArgument("make_pair_problem: invalid aggregate pair");
  LocalPairProblem p;
  const auto a = agg.members(I);
  const auto b = agg.members(J);
  p.members.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(p.members));
  for (index_t v : p.members) p.side.push_back(agg[v] == I ? 1 : 2);
  p.laplacian = local_laplacian(A, p.members);
  return p;
}

/// w = 1_{V1}/|V1| - 1_{V2}/|V2|.
inline DenseVector pair_coarse_vector(std::span<const int> side) {
  const auto n1 = std::count(side.begin(), side.end(), 1);
  const auto n2 = static_cast<std::ptrdiff_t>(side.size()) - n1;
  if (n1 == 0 || n2 == 0) throw InvalidArgument("pair_coarse_vector: one side is empty");
  DenseVector w(static_cast<Eigen::Index>(side.size()));
  for (std::size_t k = 0; k < side.size(); ++k)
    w(static_cast<Eigen::Index>(k)) = side[k] == 1 ? 1.0 / static_cast<double>(n1) : -1.0 / static_cast<double>(n2);
  return w;
}

/// Dense two-level operators for a one-dimensional coarse space span{w}:
/// S = I - M^{-1} A, projection = w (w^T A w)^{-1} w^T A, T = projection * S,
/// E = (I - projection) * S.
struct LocalOperators {
  DenseMatrix S, projection, T, E;
};

inline LocalOperators local_error_operators(const DenseMatrix& A, const DenseVector& w,
                                            const SmootherSpec& smoother) {
  const double c = w.dot(A * w);
  if (!(c > 1e-14 * A.cwiseAbs().maxCoeff() * w.squaredNorm()))
    throw NumericalError("local_error_operators: w^T A w vanishes");
  LocalOperators op;
  op.S = dense_smoother_propagator(A, smoother);
  op.projection = w * (A * w).transpose() / c;
  op.T = op.projection * op.S;
  op.E = op.S - op.T;
  return op;
}

/// Trace of a rank-one matrix as W_k^T W^k / W_kk for the first k with
/// |W_kk| > rel_tol * max|W|; 0 if no such k exists.
inline double rank_one_trace(const DenseMatrix& W, double rel_tol = 1e-12) {
  const double scale = W.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < W.rows(); ++k)
    if (std::abs(W(k, k)) > rel_tol * scale) return W.row(k).dot(W.col(k)) / W(k, k);
  return 0.0;
}

/// |T|^2 in the A-seminorm, as the trace of the rank-one W = S^T A pi S A^+.
inline double t_norm_sq(const DenseMatrix& A, const DenseMatrix& A_pinv, const DenseMatrix& S,
                        const DenseVector& w) {
  const DenseVector Aw = A * w;
  const double c = w.dot(Aw);
  if (!(c > 0.0)) throw NumericalError("t_norm_sq: w^T A w vanishes");
  const DenseVector a = S.transpose() * Aw;
  const DenseVector b = A_pinv * a;
  const DenseMatrix W = a * b.transpose() / c;
  return rank_one_trace(W);
}

inline double t_norm(const DenseMatrix& A, const DenseMatrix& A_pinv, const DenseMatrix& S,
                     const DenseVector& w) {
  return std::sqrt(std::max(0.0, t_norm_sq(A, A_pinv, S, w)));
}

namespace detail {

inline std::vector<std::uint32_t> adjacency_masks(const DenseMatrix& A) {
  const auto n = A.rows();
  std::vector<std::uint32_t> adj(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && A(i, j) != 0.0) adj[static_cast<std::size_t>(i)] |= std::uint32_t{1} << j;
  return adj;
}

inline bool mask_connected(std::uint32_t set, std::span<const std::uint32_t> adj) {
  if (set == 0) return false;
  std::uint32_t seen = set & (~set + 1);
  std::uint32_t frontier = seen;
  while (frontier) {
    std::uint32_t next = 0;
    for (std::uint32_t f = frontier; f; f &= f - 1) next |= adj[static_cast<std::size_t>(std::countr_zero(f))];
    next &= set & ~seen;
    seen |= next;
    frontier = next;
  }
  return seen == set;
}

/// a before b in lexicographic order of membership vectors (side 1 < side 2).
inline bool lex_less(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t d = a ^ b;
  return d != 0 && (a & (d & (~d + 1))) != 0;
}

} // namespace detail

/// Calls f(mask) for every split whose side 1 (bits set) has floor(n/2)
/// vertices, with both sides inducing connected subgraphs. For even n side 1
/// holds vertex 0, so each unordered split appears once. Masks come in
/// increasing numeric order. Returns false, without calling f, if n > cap.
template <class F>
bool for_each_balanced_partition(const DenseMatrix& A, F&& f, index_t cap = 16) {
  const auto n = static_cast<unsigned>(A.rows());
  if (cap > 31) throw InvalidArgument("pair cap above 31 is not supported");
  if (n > cap) return false;
  if (n < 2) return true;
  const auto adj = detail::adjacency_masks(A);
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  const unsigned m = n / 2;
  std::uint32_t s = (std::uint32_t{1} << m) - 1;
  while (s <= full) {
    if ((n % 2 == 1 || (s & 1u)) && detail::mask_connected(s, adj) && detail::mask_connected(full & ~s, adj))
      f(s);
    const std::uint32_t c = s & (~s + 1);
    const std::uint32_t r = s + c;
    if (r > full || r == 0) break;
    s = (((r ^ s) >> 2) / c) | r;
  }
  return true;
}

inline std::optional<std::vector<std::uint32_t>> enumerate_balanced_partitions(const DenseMatrix& A,
                                                                              index_t cap = 16) {
  std::vector<std::uint32_t> out;
  if (!for_each_balanced_partition(A, [&](std::uint32_t s) { out.push_back(s); }, cap)) return std::nullopt;
  return out;
}

inline std::vector<int> side_from_mask(std::uint32_t mask, index_t n) {
  std::vector<int> side(n);
  for (index_t k = 0; k < n; ++k) side[k] = (mask >> k) & 1u ? 1 : 2;
  return side;
}

struct PairReshape {
  std::vector<int> side;   ///< chosen split (input split if skipped or no candidate)
  double old_t_sq = 0.0;   ///< |T|^2 of the input split
  double new_t_sq = 0.0;   ///< |T|^2 of the chosen split
  index_t candidates = 0;
  bool skipped = false;    ///< pair larger than the cap
};

/// Exhaustive search for the balanced connected split with the largest |T|.
/// Values within 1e-12 (relative) count as ties, resolved toward the
/// lexicographically smallest membership vector.
inline PairReshape reshape_pair(const LocalPairProblem& p, const SmootherSpec& smoother, index_t cap = 16) {
  const DenseMatrix& A = p.laplacian;
  const index_t n = p.members.size();
  if (p.side.size() != n || static_cast<index_t>(A.rows()) != n)
    throw InvalidArgument("reshape_pair: inconsistent pair problem");
  PairReshape res;
  res.side = p.side;
  const DenseMatrix S = dense_smoother_propagator(A, smoother);
  const DenseMatrix pinv = symmetric_pseudo_inverse(A);
  res.old_t_sq = t_norm_sq(A, pinv, S, pair_coarse_vector(p.side));
  res.new_t_sq = res.old_t_sq;

  std::optional<std::uint32_t> best;
  double best_val = 0.0;
  const bool ran = for_each_balanced_partition(
      A,
      [&](std::uint32_t mask) {
        ++res.candidates;
        const double v = t_norm_sq(A, pinv, S, pair_coarse_vector(side_from_mask(mask, n)));
        const double tol = 1e-12 * std::max(1.0, std::abs(best_val));
        if (!best || v > best_val + tol || (std::abs(v - best_val) <= tol && detail::lex_less(mask, *best))) {
          best = mask;
          best_val = v;
        }
      },
      cap);
  res.skipped = !ran;
  if (best) {
    res.side = side_from_mask(*best, n);
    res.new_t_sq = best_val;
  }
  return res;
}

/// One line of the per-pair log.
struct PairDiagnostics {
  index_t sweep = 0;
  index_t agg_a = 0, agg_b = 0;
  index_t old_size_a = 0, old_size_b = 0;
  index_t new_size_a = 0, new_size_b = 0;
  double old_t = 0.0, new_t = 0.0;
  bool skipped = false;
};

struct ReshapeOptions {
  index_t sweeps = 1;
  index_t pair_cap = 16;
  SmootherSpec smoother = SmootherSpec::l1_jacobi();
  std::function<void(const PairDiagnostics&)> log;
};

/// Aggregate pairs joined by at least one fine edge, as (min, max), sorted.
inline std::vector<std::pair<index_t, index_t>> coarse_edges(const SparseMatrix& A, const Aggregation& agg) {
  std::vector<std::pair<index_t, index_t>> e;
  for (index_t i = 0; i < A.rows(); ++i)
    for (index_t j : A.row_cols(i))
      if (agg[i] < agg[j]) e.emplace_back(agg[i], agg[j]);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

/// Greedy maximal matching over edges taken in the given order.
inline std::vector<std::pair<index_t, index_t>> greedy_matching(
    std::span<const std::pair<index_t, index_t>> edges, index_t n_vertices) {
  std::vector<char> used(n_vertices, 0);
  std::vector<std::pair<index_t, index_t>> m;
  for (const auto& [a, b] : edges) {
    if (used[a] || used[b]) continue;
    used[a] = used[b] = 1;
    m.emplace_back(a, b);
  }
  return m;
}

/// Reshapes matched neighbouring aggregate pairs. In each sweep the pairs of
/// a greedy maximal matching are reshaped independently. An aggregate keeps
/// the new side that overlaps most with its old members; its coarse vertex
/// stays unless it moved to the partner, in which case the smallest member
/// takes over. The aggregate count never changes.
inline Aggregation reshape_sweep(const SparseMatrix& A, const Aggregation& agg, const ReshapeOptions& opt = {}) {
  if (A.rows() != agg.n_fine()) throw InvalidArgument("reshape_sweep: size mismatch");
  opt.smoother.validate();
  Aggregation cur = agg;
  for (index_t sweep = 0; sweep < opt.sweeps; ++sweep) {
    const auto edges = coarse_edges(A, cur);
    const auto pairs = greedy_matching(edges, cur.n_coarse());
    std::vector<LocalPairProblem> probs(pairs.size());
    std::vector<PairReshape> results(pairs.size());
    parallel_for(pairs.size(), [&](index_t k) {
      probs[k] = make_pair_problem(A, cur, pairs[k].first, pairs[k].second);
      results[k] = reshape_pair(probs[k], opt.smoother, opt.pair_cap);
    });

    std::vector<index_t> center_of(cur.n_fine());
    for (index_t i = 0; i < cur.n_fine(); ++i) center_of[i] = cur.coarse_vertex_of_agg()[cur[i]];
    for (index_t k = 0; k < pairs.size(); ++k) {
      const auto [I, J] = pairs[k];
      const auto& p = probs[k];
      const auto& side = results[k].side;
      index_t keep1 = 0, keep2 = 0;  // old I members on new side 1 / side 2
      for (index_t m = 0; m < p.members.size(); ++m)
        if (p.side[m] == 1) (side[m] == 1 ? keep1 : keep2)++;
      const int side_of_I = keep1 >= keep2 ? 1 : 2;
      std::vector<index_t> mem_I, mem_J;
      for (index_t m = 0; m < p.members.size(); ++m) (side[m] == side_of_I ? mem_I : mem_J).push_back(p.members[m]);
      auto place = [&](const std::vector<index_t>& mem, index_t old_center) {
        const bool stays = std::binary_search(mem.begin(), mem.end(), old_center);
        const index_t c = stays ? old_center : mem.front();
        for (index_t v : mem) center_of[v] = c;
      };
      place(mem_I, cur.coarse_vertex_of_agg()[I]);
      place(mem_J, cur.coarse_vertex_of_agg()[J]);
      if (opt.log) {
        PairDiagnostics d;
        d.sweep = sweep;
        d.agg_a = I;
        d.agg_b = J;
        d.old_size_a = cur.agg_sizes()[I];
        d.old_size_b = cur.agg_sizes()[J];
        d.new_size_a = mem_I.size();
        d.new_size_b = mem_J.size();
        d.old_t = std::sqrt(std::max(0.0, results[k].old_t_sq));
        d.new_t = std::sqrt(std::max(0.0, results[k].new_t_sq));
        d.skipped = results[k].skipped;
        opt.log(d);
      }
    }
    cur = Aggregation::from_centers(center_of);
  }
  return cur;
}

} // namespace uaamg
