#pragma once

// JSON views of hierarchies, solve reports and quality tables.
// Requires nlohmann/json.

#include <nlohmann/json.hpp>

#include "uaamg/analysis.hpp"
#include "uaamg/hierarchy.hpp"
#include "uaamg/solvers.hpp"

namespace uaamg {

inline nlohmann::json hierarchy_summary(const Hierarchy& h) {
  nlohmann::json levels = nlohmann::json::array();
  for (index_t l = 0; l < h.levels(); ++l) {
    nlohmann::json lv{{"level", l}, {"n", h.op(l).rows()}, {"nnz", h.op(l).nnz()}};
    if (l + 1 < h.levels()) {
      lv["coarsening_ratio"] = h.aggregation(l).coarsening_ratio();
      lv["max_aggregate"] = h.aggregation(l).max_size();
    }
    levels.push_back(std::move(lv));
  }
  return {{"levels", std::move(levels)},
          {"singular", h.singular()},
          {"grid_complexity", h.grid_complexity()},
          {"operator_complexity", h.operator_complexity()}};
}

/// Timings go in a separate "timings" object so outputs can be compared
/// with it removed.
inline nlohmann::json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"restarts", r.restarts},
          {"residual_history", r.residual_history},
          {"timings", {{"setup_seconds", r.setup_seconds},
                       {"solve_seconds", r.solve_seconds},
                       {"total_seconds", r.setup_seconds + r.solve_seconds}}}};
}

inline nlohmann::json to_json(const TwoLevelReport& r) {
  nlohmann::json j{{"fine", r.fine_level},
                   {"coarse", r.coarse_level},
                   {"ratio", r.coarsening_ratio},
                   {"q_energy_sq", r.q_energy_sq}};
  j["e_norm"] = r.e_norm ? nlohmann::json(*r.e_norm) : nlohmann::json(nullptr);
  return j;
}

} // namespace uaamg
