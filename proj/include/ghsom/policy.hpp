#pragma once

// Interactive growth restraint: Case 1 stops stratification of units holding
// few samples, Case 2 inserts a unit into the map instead of adding a layer.

#include <cstddef>
#include <set>
#include <span>

#include "ghsom/context.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

/// Case 1: true when n_k <= alpha * n_total.
bool case1_veto(std::size_t n_k, std::size_t n_total, double alpha) noexcept;

struct Case2Check {
  bool fires = false;
  double lhs = 0.0;  // qe_k
  double rhs = 0.0;  // beta * tau1 * sum of qe over the map's winner units
};

/// Case 2: qe_k >= beta * tau1 * sum_{y in winners} qe_y, and qe_k > 0.
Case2Check case2_insert_check(const MapGrid& map, GridPos unit, double tau1, double beta);

/// Vertical-growth test: winner with at least two samples, qe_k >= tau2 * qe0,
/// and the map's layer below max_depth.
bool stratification_candidate(const MapGrid& map, const Unit& unit, const BuildContext& ctx);

struct PolicyOutcome {
  std::set<GridPos> vetoed;  // positions in the final (post-insertion) map
  int insertions = 0;
  int refused = 0;
};

/// Runs the interactive rules on a grown, scored map: every stratification
/// candidate is checked against Case 1; every unit that will not stratify is
/// checked against Case 2. One insertion (at the highest-qe firing unit) is
/// applied per round, followed by retraining and rescoring, until no unit
/// fires or the size cap refuses. Decisions go to `audit` with local map id.
/// No-op when the policy is disabled.
PolicyOutcome apply_policy(MapGrid& map, const BuildContext& ctx, AuditBuffer& audit);

}  // namespace ghsom
