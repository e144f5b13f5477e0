#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uaamg/error.hpp"
#include "uaamg/galerkin.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

/// Which vertices a coarse vertex may absorb into its aggregate.
enum class Neighborhood {
  direct,    ///< unprocessed neighbours of the coarse vertex
  distance2  ///< also unprocessed vertices two edges away, through a member
};

/// Order in which a coarse vertex takes its neighbours when the size cap
/// truncates the candidate list.
enum class NeighbourOrder {
  index,    ///< increasing vertex index
  strength  ///< largest |a_ij| first, ties by index
};

struct AggregationConfig {
  std::optional<index_t> size_cap;  ///< t; empty means unlimited
  std::uint64_t seed = 0;
  index_t max_passes = 20;
  Neighborhood neighborhood = Neighborhood::direct;
  NeighbourOrder order = NeighbourOrder::index;
  /// 2 aggregates the Galerkin operator once more and composes the maps,
  /// which skips a level.
  int passes_per_level = 1;

  void validate() const {
    if (size_cap && *size_cap < 1) throw InvalidArgument("aggregate size cap must be >= 1");
    if (max_passes < 1) throw InvalidArgument("max_passes must be >= 1");
    if (passes_per_level != 1 && passes_per_level != 2)
      throw InvalidArgument("passes_per_level must be 1 or 2");
  }
};

/// Counter-based uniform variate in [0, 1) from (seed, pass, vertex); the
/// splitmix64 finalizer applied to a combined key.
inline double hashed_uniform(std::uint64_t seed, std::uint64_t pass, std::uint64_t vertex) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t h = mix(mix(mix(seed) ^ pass) ^ vertex);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// v_i = d_i + ((i mod 12) + rand_i) / 12.
inline double quasi_random_score(index_t degree, index_t vertex, double rand01) {
  return static_cast<double>(degree) + (static_cast<double>(vertex % 12) + rand01) / 12.0;
}

/// Scores with rand_i supplied by rand(i); d_i counts off-diagonal entries.
template <class Rand>
Vector quasi_random_scores(const SparseMatrix& A, Rand&& rand) {
  Vector v(A.rows());
  parallel_for(A.rows(), [&](index_t i) { v[i] = quasi_random_score(A.off_diagonal_count(i), i, rand(i)); });
  return v;
}

inline Vector quasi_random_scores(const SparseMatrix& A, std::uint64_t seed, std::uint64_t pass = 0) {
  return quasi_random_scores(A, [&](index_t i) { return hashed_uniform(seed, pass, i); });
}

/// Strict total order on vertices: higher score wins, ties go to the smaller index.
inline bool outranks(std::span<const double> scores, index_t i, index_t j) {
  return scores[i] > scores[j] || (scores[i] == scores[j] && i < j);
}

/// Unprocessed vertices that outrank every other unprocessed vertex within
/// graph distance 2. Any two of them are at distance >= 3, and the set is
/// nonempty whenever an unprocessed vertex exists.
inline std::vector<index_t> select_coarse_vertices(const SparseMatrix& A2_pattern,
                                                   std::span<const double> scores,
                                                   std::span<const char> processed) {
  const index_t n = A2_pattern.rows();
  std::vector<char> is_coarse(n, 0);
  parallel_for(n, [&](index_t i) {
    if (processed[i]) return;
    for (index_t j : A2_pattern.row_cols(i))
      if (j != i && !processed[j] && !outranks(scores, i, j)) return;
    is_coarse[i] = 1;
  });
  std::vector<index_t> C;
  for (index_t i = 0; i < n; ++i)
    if (is_coarse[i]) C.push_back(i);
  return C;
}

/// Mutable state of the multi-pass aggregation.
struct AggregationState {
  explicit AggregationState(index_t n) : center_of(n, npos), processed(n, 0) {}
  std::vector<index_t> center_of;
  std::vector<char> processed;

  index_t processed_count() const {
    return static_cast<index_t>(std::count(processed.begin(), processed.end(), char{1}));
  }
};

/// Forms one aggregate around each coarse vertex in C.
///
/// Each coarse vertex takes its unprocessed neighbours in the given order,
/// up to cap - 1 of them. The distance-3 property of C
/// makes these claims disjoint. With Neighborhood::distance2 a still-free
/// vertex adjacent to a freshly claimed member then asks to join; if several
/// aggregates are reachable it asks the one whose coarse vertex outranks the
/// others, and each aggregate admits requests in the same order (strength
/// meaning the strongest connection to a member) until the cap is reached.
inline void aggregate_pass(const SparseMatrix& A, std::span<const index_t> C,
                           std::span<const double> scores, AggregationState& state,
                           std::optional<index_t> cap,
                           Neighborhood neighborhood = Neighborhood::direct,
                           NeighbourOrder order = NeighbourOrder::index) {
  const index_t n = A.rows();
  const index_t limit = cap ? *cap : npos;
  const std::vector<char> was_processed = state.processed;
  std::vector<index_t> taken(C.size(), 0);

  parallel_for(C.size(), [&](index_t k) {
    const index_t c = C[k];
    const auto cols = A.row_cols(c);
    const auto vals = A.row_values(c);
    std::vector<std::pair<double, index_t>> cand;
    for (std::size_t e = 0; e < cols.size(); ++e)
      if (cols[e] != c && !was_processed[cols[e]])
        cand.emplace_back(order == NeighbourOrder::strength ? -std::abs(vals[e]) : 0.0, cols[e]);
    std::sort(cand.begin(), cand.end());
    state.center_of[c] = c;
    index_t count = 1;
    for (const auto& [key, j] : cand) {
      if (count >= limit) break;
      state.center_of[j] = c;
      ++count;
    }
    taken[k] = count;
  });

  if (neighborhood == Neighborhood::distance2) {
    // ownership after the first stage; read-only from here on
    const std::vector<index_t> owner = state.center_of;
    auto fresh = [&](index_t v) { return !was_processed[v] && owner[v] != npos; };
    std::vector<index_t> request(n, npos);
    parallel_for(n, [&](index_t j) {
      if (was_processed[j] || owner[j] != npos) return;
      index_t best = npos;
      for (index_t m : A.row_cols(j)) {
        if (m == j || !fresh(m) || owner[m] == m) continue;
        const index_t c = owner[m];
        if (best == npos || outranks(scores, c, best)) best = c;
      }
      request[j] = best;
    });
    std::vector<index_t> slot(n, npos);
    for (index_t k = 0; k < C.size(); ++k) slot[C[k]] = k;
    std::vector<std::vector<index_t>> asks(C.size());
    for (index_t j = 0; j < n; ++j)
      if (request[j] != npos) asks[slot[request[j]]].push_back(j);
    parallel_for(C.size(), [&](index_t k) {
      const index_t c = C[k];
      std::vector<std::pair<double, index_t>> cand;
      for (index_t j : asks[k]) {
        double strength = 0.0;
        const auto cols = A.row_cols(j);
        const auto vals = A.row_values(j);
        for (std::size_t e = 0; e < cols.size(); ++e)
          if (cols[e] != j && cols[e] != c && fresh(cols[e]) && owner[cols[e]] == c)
            strength = std::max(strength, std::abs(vals[e]));
        cand.emplace_back(order == NeighbourOrder::strength ? -strength : 0.0, j);
      }
      std::sort(cand.begin(), cand.end());
      index_t count = taken[k];
      for (const auto& [key, j] : cand) {
        if (count >= limit) break;
        state.center_of[j] = c;
        ++count;
      }
    });
  }

  parallel_for(n, [&](index_t i) {
    if (state.center_of[i] != npos) state.processed[i] = 1;
  });
}

/// Per-pass record of the coarse sets, for verification.
struct AggregationTrace {
  std::vector<std::vector<index_t>> coarse_sets;
  std::vector<std::vector<char>> processed_before;
};

/// Multi-pass parallel aggregation. Each pass re-scores with fresh hashed
/// randomness, selects a distance-3 coarse set and grows aggregates around
/// it. Vertices still free after max_passes become singletons. Aggregates
/// are numbered by increasing coarse vertex.
inline Aggregation aggregate(const SparseMatrix& A, const AggregationConfig& cfg,
                             AggregationTrace* trace = nullptr) {
  cfg.validate();
  if (A.rows() == 0) throw InvalidArgument("aggregate: empty matrix");
  if (!A.square()) throw InvalidArgument("aggregate: matrix is not square");
  const index_t n = A.rows();
  const SparseMatrix A2 = squared_adjacency_pattern(A);
  AggregationState state(n);
  index_t done = 0;
  for (index_t pass = 0; pass < cfg.max_passes && done < n; ++pass) {
    const Vector scores = quasi_random_scores(A, cfg.seed, pass);
    const auto C = select_coarse_vertices(A2, scores, state.processed);
    if (trace) {
      trace->coarse_sets.push_back(C);
      trace->processed_before.push_back(state.processed);
    }
    aggregate_pass(A, C, scores, state, cfg.size_cap, cfg.neighborhood, cfg.order);
    done = state.processed_count();
  }
  for (index_t i = 0; i < n; ++i)
    if (state.center_of[i] == npos) state.center_of[i] = i;
  Aggregation agg = Aggregation::from_centers(state.center_of);

  if (cfg.passes_per_level == 2) {
    AggregationConfig second = cfg;
    second.passes_per_level = 1;
    second.seed = cfg.seed + 1;
    const Aggregation next = aggregate(galerkin_coarse(A, agg), second);
    return compose(agg, next);
  }
  return agg;
}

} // namespace uaamg
