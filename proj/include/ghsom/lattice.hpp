#pragma once

// Lattice surgery shared by row/column growth, unit generation and policy
// insertions. Inserted units are fresh: no samples, zeroed trackers.

#include <span>

#include "ghsom/types.hpp"

namespace ghsom {

enum class InsertOutcome { inserted, size_cap, invalid };

/// Inserts a full column between columns `left` and `left + 1`. Each new unit
/// takes the mean weight of its horizontal flanks; a hole flank contributes
/// nothing, two hole flanks yield a hole.
InsertOutcome insert_column(MapGrid& map, int left, int max_units);

/// Inserts a full row between rows `top` and `top + 1`, same weighting rule.
InsertOutcome insert_row(MapGrid& map, int top, int max_units);

/// Clears sample assignments and error statistics of every unit.
void clear_statistics(MapGrid& map);

/// 4-neighbourhood (up, down, left, right) positions of active units.
std::vector<GridPos> lattice_neighbors(const MapGrid& map, GridPos p);

/// 8-neighbourhood positions of active units.
std::vector<GridPos> moore_neighbors(const MapGrid& map, GridPos p);

/// Mean of two vectors, element-wise.
Vector midpoint(std::span<const double> a, std::span<const double> b);

}  // namespace ghsom
