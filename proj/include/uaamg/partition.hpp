#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "uaamg/error.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

inline constexpr index_t npos = std::numeric_limits<index_t>::max();

/// Non-overlapping partition of a level's vertices into aggregates. This is
/// the prolongator in implicit form: P(i, j) = 1 iff vertex_to_agg[i] == j.
class Aggregation {
public:
  Aggregation() = default;

  /// Aggregate j is represented by coarse_vertex_of_agg[j], which must be one
  /// of its members. Every aggregate must be nonempty.
  Aggregation(std::vector<index_t> vertex_to_agg, std::vector<index_t> coarse_vertex_of_agg)
      : vertex_to_agg_(std::move(vertex_to_agg)), coarse_vertex_(std::move(coarse_vertex_of_agg)) {
    const index_t nc = coarse_vertex_.size();
    sizes_.assign(nc, 0);
    for (index_t a : vertex_to_agg_) {
      if (a >= nc) throw InvalidArgument("aggregate index out of range");
      ++sizes_[a];
    }
    for (index_t j = 0; j < nc; ++j) {
      if (sizes_[j] == 0) throw InvalidArgument("empty aggregate " + std::to_string(j));
      if (coarse_vertex_[j] >= vertex_to_agg_.size() || vertex_to_agg_[coarse_vertex_[j]] != j)
        throw InvalidArgument("coarse vertex of aggregate " + std::to_string(j) + " is not a member");
    }
    member_offsets_.assign(nc + 1, 0);
    for (index_t j = 0; j < nc; ++j) member_offsets_[j + 1] = member_offsets_[j] + sizes_[j];
    members_.resize(vertex_to_agg_.size());
    std::vector<index_t> fill(member_offsets_.begin(), member_offsets_.end() - 1);
    for (index_t i = 0; i < vertex_to_agg_.size(); ++i) members_[fill[vertex_to_agg_[i]]++] = i;
  }

  /// Every vertex its own aggregate (P = I).
  static Aggregation identity(index_t n) {
    std::vector<index_t> v(n);
    std::iota(v.begin(), v.end(), index_t{0});
    return Aggregation(v, v);
  }

  /// Numbers aggregates by increasing coarse vertex. center_of[i] is the
  /// coarse vertex owning i (center_of[c] == c for coarse vertices); the
  /// aggregate index of c is the exclusive prefix sum of the center flags.
  static Aggregation from_centers(std::span<const index_t> center_of) {
    const index_t n = center_of.size();
    std::vector<index_t> flag(n, 0);
    for (index_t i = 0; i < n; ++i) {
      if (center_of[i] >= n) throw InvalidArgument("unassigned vertex " + std::to_string(i));
      if (center_of[center_of[i]] != center_of[i])
        throw InvalidArgument("center of vertex " + std::to_string(i) + " is not a center");
      if (center_of[i] == i) flag[i] = 1;
    }
    std::vector<index_t> id(n, 0);
    std::exclusive_scan(flag.begin(), flag.end(), id.begin(), index_t{0});
    const index_t nc = n == 0 ? 0 : id.back() + flag.back();
    std::vector<index_t> v2a(n), centers(nc);
    for (index_t i = 0; i < n; ++i) {
      v2a[i] = id[center_of[i]];
      if (flag[i]) centers[id[i]] = i;
    }
    return Aggregation(std::move(v2a), std::move(centers));
  }

  /// Arbitrary labels, renumbered so the smallest member of each aggregate
  /// is its coarse vertex and those are increasing.
  static Aggregation from_labels(std::span<const index_t> labels) {
    const index_t n = labels.size();
    std::vector<index_t> center_of(n);
    std::vector<index_t> rep_of_label;
    for (index_t i = 0; i < n; ++i) {
      const index_t l = labels[i];
      if (l >= rep_of_label.size()) rep_of_label.resize(l + 1, npos);
      if (rep_of_label[l] == npos) rep_of_label[l] = i;
      center_of[i] = rep_of_label[l];
    }
    return from_centers(center_of);
  }

  index_t n_fine() const { return vertex_to_agg_.size(); }
  index_t n_coarse() const { return coarse_vertex_.size(); }
  index_t operator[](index_t i) const { return vertex_to_agg_[i]; }
  std::span<const index_t> vertex_to_agg() const { return vertex_to_agg_; }
  std::span<const index_t> agg_sizes() const { return sizes_; }
  std::span<const index_t> coarse_vertex_of_agg() const { return coarse_vertex_; }

  /// Members of aggregate j in increasing fine index.
  std::span<const index_t> members(index_t j) const {
    return {members_.data() + member_offsets_[j], sizes_[j]};
  }

  index_t max_size() const {
    return sizes_.empty() ? 0 : *std::max_element(sizes_.begin(), sizes_.end());
  }

  double coarsening_ratio() const {
    return n_coarse() == 0 ? 1.0 : static_cast<double>(n_fine()) / static_cast<double>(n_coarse());
  }

  bool has_ordered_centers() const {
    return std::adjacent_find(coarse_vertex_.begin(), coarse_vertex_.end(),
                              std::greater_equal<>()) == coarse_vertex_.end();
  }

  friend bool operator==(const Aggregation& a, const Aggregation& b) {
    return a.vertex_to_agg_ == b.vertex_to_agg_ && a.coarse_vertex_ == b.coarse_vertex_;
  }

private:
  std::vector<index_t> vertex_to_agg_;
  std::vector<index_t> coarse_vertex_;
  std::vector<index_t> sizes_;
  std::vector<index_t> member_offsets_{0};
  std::vector<index_t> members_;
};

/// Aggregation of the fine level onto the level below `coarse`:
/// vertex i goes to coarse[fine[i]].
inline Aggregation compose(const Aggregation& fine, const Aggregation& coarse) {
  if (coarse.n_fine() != fine.n_coarse()) throw InvalidArgument("compose: size mismatch");
  std::vector<index_t> v2a(fine.n_fine());
  for (index_t i = 0; i < v2a.size(); ++i) v2a[i] = coarse[fine[i]];
  std::vector<index_t> centers(coarse.n_coarse());
  for (index_t j = 0; j < centers.size(); ++j)
    centers[j] = fine.coarse_vertex_of_agg()[coarse.coarse_vertex_of_agg()[j]];
  return Aggregation(std::move(v2a), std::move(centers));
}

/// True when every aggregate induces a connected subgraph of A's graph.
inline bool aggregates_connected(const SparseMatrix& A, const Aggregation& agg) {
  if (A.rows() != agg.n_fine()) throw InvalidArgument("aggregates_connected: size mismatch");
  std::vector<char> seen(agg.n_fine(), 0);
  std::vector<index_t> stack;
  for (index_t j = 0; j < agg.n_coarse(); ++j) {
    const auto mem = agg.members(j);
    stack.assign(1, mem.front());
    seen[mem.front()] = 1;
    index_t reached = 1;
    while (!stack.empty()) {
      const index_t u = stack.back();
      stack.pop_back();
      for (index_t w : A.row_cols(u)) {
        if (agg[w] == j && !seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != mem.size()) return false;
  }
  return true;
}

} // namespace uaamg
