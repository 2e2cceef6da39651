#pragma once

// GHSOM controller: horizontal growth of each map, vertical stratification of
// high-error units, and the hierarchy edits built on the same machinery.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ghsom/context.hpp"
#include "ghsom/lattice.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

struct ErrorUnitPair {
  GridPos e;  // winner with the largest qe
  GridPos d;  // its 4-neighbour with the most distant weight
};

/// Throws ErrorCode::degenerate when the map has no winner unit. Returns
/// nullopt when the error unit has no active 4-neighbour.
std::optional<ErrorUnitPair> select_error_unit(const MapGrid& map);

/// Same row: column inserted between e and d. Same column: row inserted.
/// New units take the mean of the two units they separate. `invalid` when e
/// and d are not 4-neighbours.
InsertOutcome insert_row_or_column(MapGrid& map, GridPos e, GridPos d, int max_units);

/// Threshold reference taken from the parent unit (or layer 0 for the root),
/// per GrowthParams::tau1_reference.
double parent_reference(double parent_qe, std::size_t parent_count, Tau1Reference ref) noexcept;

/// One training phase over map.samples followed by assign_and_score; appends
/// to the qe history.
void run_training_phase(MapGrid& map, const BuildContext& ctx);

/// Evaluates every active unit for elimination against the current state and
/// removes the flagged ones (never the last unit). Returns how many went.
int elimination_sweep(MapGrid& map, const BuildContext& ctx, AuditBuffer& audit);

/// Train / score / insert loop for one map until mqe_M < tau1 * parent_ref or
/// a cap stops it. Returns (and records in map.status) the stop reason.
GrowthStatus grow_map(MapGrid& map, double parent_ref, const BuildContext& ctx, AuditBuffer& audit);

/// A 2x2 map over the samples of `unit`. Child weights start at the parent
/// weight blended 25% toward the vertical and horizontal lattice neighbours
/// (mirrored at edges). Layer, parent link and seed are set; id is 0.
MapGrid make_child_map(const MapGrid& parent, GridPos unit);

/// Grows `map`, applies the interactive policy, then stratifies qualifying
/// units depth-first in row-major order. Returns the subtree in DFS preorder
/// with local ids (the argument becomes element 0).
std::vector<MapGrid> build_subtree(MapGrid map, double parent_ref, const BuildContext& ctx,
                                   AuditBuffer& audit);

using PhaseCallback = std::function<void(const MapGrid&)>;

/// Full run over normalized data. Deterministic per seed. `on_phase` sees
/// every training phase of the root map.
Hierarchy train_hierarchy(const FeatureMatrix& data, const Params& params, std::uint64_t seed,
                          PhaseCallback on_phase = {});

/// Adds a detached subtree (local ids) to `h` under `parent`, assigning fresh
/// global ids in preorder and appending the subtree's audit entries.
/// With `root_id` set, the subtree root reuses that id (replacing the map
/// stored under it) and only descendants get fresh ids.
MapId splice_subtree(Hierarchy& h, std::vector<MapGrid> subtree, AuditBuffer audit,
                     std::optional<UnitRef> parent, std::optional<MapId> root_id = std::nullopt);

/// Removes the child subtree below a unit. The unit keeps its samples.
void prune_subtree(Hierarchy& h, MapId map, GridPos unit);

/// Creates and fully builds a child map below `unit`. `manual` skips the
/// automatic vetoes and is recorded as an override in the audit log.
MapId expand_unit(Hierarchy& h, const FeatureMatrix& data, MapId map, GridPos unit, bool manual);

/// Retrains `map` from a fresh initialization with `params` and `seed`, then
/// rebuilds its descendants. Ancestors and siblings are untouched.
void recluster_map(Hierarchy& h, const FeatureMatrix& data, MapId map, const Params& params,
                   std::uint64_t seed, PhaseCallback on_phase = {});

/// Eliminates a unit of a map in the hierarchy, pruning any child subtree
/// below it and rescoring the map over its samples.
void eliminate_unit(Hierarchy& h, const FeatureMatrix& data, MapId map, GridPos unit);

/// Re-points child maps' parent links after a lattice change.
void relink_children(Hierarchy& h, MapId map);

}  // namespace ghsom
