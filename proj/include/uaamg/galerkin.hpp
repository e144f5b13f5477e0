#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

/// Coarse operator P^T A P for a boolean prolongator: entry (I, J) is the sum
/// of a_st over s in G_I, t in G_J. Rows of A are scattered by the
/// aggregation map and compressed; P is never formed. Sums that cancel to
/// roundoff (relative 1e-14 of the absolute contributions) are dropped.
inline SparseMatrix galerkin_coarse(const SparseMatrix& A, const Aggregation& agg) {
  if (!A.square() || A.rows() != agg.n_fine())
    throw InvalidArgument("galerkin_coarse: aggregation does not match the matrix");
  const index_t nc = agg.n_coarse();
  std::vector<std::vector<index_t>> row_cols(nc);
  std::vector<Vector> row_vals(nc);

  parallel_for(nc, [&](index_t I) {
    std::vector<std::pair<index_t, double>> entries;
    for (index_t s : agg.members(I)) {
      const auto cols = A.row_cols(s);
      const auto vals = A.row_values(s);
      for (std::size_t k = 0; k < cols.size(); ++k) entries.emplace_back(agg[cols[k]], vals[k]);
    }
    // stable: equal columns keep fine-index order, so the summation order is fixed
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& cols = row_cols[I];
    auto& vals = row_vals[I];
    for (std::size_t k = 0; k < entries.size();) {
      const index_t J = entries[k].first;
      double sum = 0.0, mag = 0.0;
      for (; k < entries.size() && entries[k].first == J; ++k) {
        sum += entries[k].second;
        mag += std::abs(entries[k].second);
      }
      if (std::abs(sum) > 1e-14 * mag) {
        cols.push_back(J);
        vals.push_back(sum);
      }
    }
  });

  std::vector<index_t> offsets(nc + 1, 0);
  for (index_t I = 0; I < nc; ++I) offsets[I + 1] = offsets[I] + row_cols[I].size();
  std::vector<index_t> cols(offsets.back());
  Vector vals(offsets.back());
  parallel_for(nc, [&](index_t I) {
    std::copy(row_cols[I].begin(), row_cols[I].end(), cols.begin() + offsets[I]);
    std::copy(row_vals[I].begin(), row_vals[I].end(), vals.begin() + offsets[I]);
  });
  return SparseMatrix(nc, nc, std::move(offsets), std::move(cols), std::move(vals));
}

} // namespace uaamg
