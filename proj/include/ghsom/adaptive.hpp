#pragma once

// Unit-level growth control: walking distance and activity trackers, the
// generation and elimination conditions, and the lattice placement rules.

#include <span>
#include <string>
#include <vector>

#include "ghsom/lattice.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

/// Euclidean metric over max(dim x, dim y) components; the shorter vector is
/// zero-padded.
double eu_met(std::span<const double> x, std::span<const double> y) noexcept;

/// gamma_w * wd_prev + (1 - gamma_w) * EuMet(w_now, w_prev).
double update_wd(double wd_prev, std::span<const double> w_now, std::span<const double> w_prev,
                 double gamma_w) noexcept;

struct Activity {
  double va = 0.0;
  double act = 0.0;
};

/// act = gamma_a * act_prev + (1 - gamma_a) * o
/// va  = gamma_v * va_prev  + (1 - gamma_v) * (o - act)^2
Activity update_va(double va_prev, double act_prev, double o_now, double gamma_v,
                   double gamma_a) noexcept;

/// Error share times walking distance: (qe_j / sum_k qe_k) * wd_j. Zero when
/// the map carries no error.
double generation_score(const MapGrid& map, GridPos unit);

struct Placement {
  InsertOutcome outcome = InsertOutcome::invalid;
  GridPos first;     // WD_max1 before insertion
  GridPos second;    // WD_max2 before insertion
  GridPos inserted;  // unit holding the pair average, after insertion
  bool diagonal = false;
};

/// Picks WD_max1 (largest wd in `neighborhood`) and WD_max2 (largest wd among
/// the neighbourhood units lattice-adjacent to WD_max1, including diagonals;
/// falling back to any adjacent active unit) and inserts a unit between them.
/// Aligned pairs get a full row/column. Diagonal pairs get a row between their
/// rows; the unit in the column of WD_max1 receives the pair average and the
/// rest of the row takes vertical flank means.
Placement place_generated_unit(MapGrid& map, std::span<const GridPos> neighborhood,
                               int max_units);

/// Same placement with WD_max1 fixed at `anchor`.
Placement place_unit_at(MapGrid& map, GridPos anchor, int max_units);

/// Per active unit (row-major order of `map.units`), a 0/1 sequence over
/// `samples`: 1 when the unit is at minimal distance to the sample. Ties mark
/// every tied unit, so duplicated units produce identical sequences.
std::vector<std::vector<double>> nearest_indicators(const MapGrid& map, const FeatureMatrix& data,
                                                    std::span<const SampleId> samples);

/// Pearson correlation; 0 when either sequence has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

enum class EliminationReason { none, inactive, redundant };
const char* to_string(EliminationReason reason) noexcept;

struct EliminationVerdict {
  bool eliminate = false;
  EliminationReason reason = EliminationReason::none;
  double value = 0.0;  // va, or the correlation for "redundant"
  GridPos partner;     // earlier unit it duplicates
};

/// `indicators` as produced by nearest_indicators for the same map.
EliminationVerdict should_eliminate(const MapGrid& map, GridPos unit,
                                    const std::vector<std::vector<double>>& indicators,
                                    const AdaptiveParams& params);

/// Marks the unit as a hole and drops its samples. With `compact`, a row or
/// column left with only holes is removed. Refuses (ErrorCode::state) to
/// remove the last active unit. Child links are not touched here; see
/// eliminate_unit(Hierarchy&, ...).
void eliminate_unit(MapGrid& map, GridPos unit, bool compact = true);

/// Removes rows and columns consisting only of holes.
void compact_lattice(MapGrid& map);

}  // namespace ghsom
