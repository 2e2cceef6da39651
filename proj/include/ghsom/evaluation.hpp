#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghsom/dataset.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

struct MapQe {
  MapId id = 0;
  int layer = 1;
  double mqe = 0.0;       // mean of qe over winner units
  double total_qe = 0.0;  // sum of qe over the map's units
  std::size_t samples = 0;
  std::vector<double> history;
};

struct HierarchyQe {
  double total_qe = 0.0;  // sum over samples of distance to the leaf-level unit
  double mean_qe = 0.0;
  double mean_squared_qe = 0.0;
  std::size_t samples = 0;
  std::vector<MapQe> per_map;
};

/// Leaf-level unit of every sample, following the stored assignments.
std::vector<UnitRef> leaf_assignment(const Hierarchy& h);

/// Unit reached by sample `x` when routed by BMU search from the root,
/// descending through at most `max_layer` layers.
UnitRef route(const Hierarchy& h, std::span<const double> x, int max_layer = 1 << 30);

HierarchyQe hierarchy_qe(const Hierarchy& h, const FeatureMatrix& data);

/// n * ln(mse) + 2 * units * dim. Only the ordering between models carries
/// meaning. Returns -infinity for a zero-error model.
double model_criterion(std::size_t n, double mean_squared_error, std::size_t units,
                       std::size_t dim) noexcept;
double model_criterion(const Hierarchy& h, const FeatureMatrix& data);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// First three weight components scaled to 0..255 with round-half-up; missing
/// components read as 0.5. Values are clamped to [0,1] first.
Rgb unit_color(std::span<const double> weight) noexcept;

struct UnitPurity {
  UnitRef unit;
  std::map<std::string, std::size_t> histogram;
  std::string majority;  // ties: lexicographically smallest label
  std::size_t samples = 0;
};

struct PurityReport {
  std::vector<UnitPurity> units;
  double purity = 0.0;
  /// Per label: fraction of its samples sitting in units whose majority is
  /// that label.
  std::map<std::string, double> class_recall;
};

/// Purity of the partition at `layer` (units at that layer, or leaves above
/// it); leaves when unset. Throws ErrorCode::data for unlabeled data.
PurityReport class_purity(const Hierarchy& h, const Dataset& data,
                          std::optional<int> layer = std::nullopt);

struct Summary {
  int depth = 0;
  std::size_t maps = 0;
  std::size_t units = 0;
  double mean_qe = 0.0;
  double total_qe = 0.0;
  double criterion = 0.0;
};

Summary summarize(const Hierarchy& h, const FeatureMatrix& data);

/// One row per unit: map, layer, row, col, active, samples, qe, mqe, wd, va,
/// color, child, majority label (when labels are available).
std::string unit_table_csv(const Hierarchy& h, const Dataset* data);

/// Line chart of every map's per-phase mqe history.
std::string qe_history_svg(const Hierarchy& h);

/// map,phase,mqe rows.
std::string qe_history_csv(const Hierarchy& h);

}  // namespace ghsom
