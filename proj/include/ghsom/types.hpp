#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ghsom {

using Vector = std::vector<double>;
using MapId = int;
using SampleId = std::size_t;

/// Dense row-major sample matrix. Row i holds the features of sample id i.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

  void append_row(std::span<const double> values);

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct GridPos {
  int row = 0;
  int col = 0;

  auto operator<=>(const GridPos&) const = default;
};

// ---------------------------------------------------------------------------
// Parameters

struct Schedules {
  int epochs = 50;  // passes over the assigned samples per training phase
  double lr_start = 0.5;
  double lr_end = 0.01;
  double radius_start = 1.0;
  double radius_end = 0.25;

  bool operator==(const Schedules&) const = default;
};

enum class GrowthMode { row_column, unit_level, hybrid };

/// Which statistic of the parent unit the horizontal-growth threshold scales.
enum class Tau1Reference { sum, mean };

struct GrowthParams {
  double tau1 = 0.07;
  /// +infinity disables stratification ("off").
  double tau2 = 0.01;
  int max_map_units = 64;
  int max_depth = 5;
  GrowthMode mode = GrowthMode::row_column;
  Tau1Reference tau1_reference = Tau1Reference::sum;

  bool stratification_off() const noexcept { return tau2 == std::numeric_limits<double>::infinity(); }
  bool operator==(const GrowthParams&) const = default;
};

struct AdaptiveParams {
  double gamma_w = 0.9;
  double gamma_v = 0.9;
  double gamma_a = 0.9;
  double theta_g = 0.05;
  double theta_e = 1e-4;
  double theta_c = 0.999;

  bool operator==(const AdaptiveParams&) const = default;
};

struct InteractiveParams {
  double alpha = 0.04;
  double beta = 4.0;
  bool enabled = false;

  bool operator==(const InteractiveParams&) const = default;
};

struct Params {
  GrowthParams growth;
  Schedules schedules;
  InteractiveParams interactive;
  AdaptiveParams adaptive;
  int jobs = 1;  // >1 trains sibling subtrees concurrently

  bool operator==(const Params&) const = default;
};

// ---------------------------------------------------------------------------
// Model

struct Unit {
  int row = 0;
  int col = 0;
  Vector weight;
  std::vector<SampleId> assigned;
  double qe = 0.0;
  double mqe = 0.0;
  double wd = 0.0;   // walking distance
  double va = 0.0;   // output variance
  double act = 0.0;  // average activation
  bool active = true;  // false: eliminated position kept as a lattice hole
  std::optional<MapId> child;

  bool is_winner() const noexcept { return active && !assigned.empty(); }
  bool operator==(const Unit&) const = default;
};

struct UnitRef {
  MapId map = 0;
  int row = 0;
  int col = 0;

  GridPos pos() const noexcept { return {row, col}; }
  bool operator==(const UnitRef&) const = default;
};

/// Why a map stopped growing horizontally.
enum class GrowthStatus {
  untrained,
  converged,             // mqe_M fell below tau1 * parent reference
  size_cap,              // max_map_units reached or insertion refused
  no_neighbor,           // error unit has no active lattice neighbor
  generation_threshold,  // unit-level mode: no unit passed theta_G
  cycle_limit,           // unit-level mode: growth-cycle budget spent
  zero_error,            // nothing to refine
  empty,                 // map has no samples
};

const char* to_string(GrowthStatus status) noexcept;
std::optional<GrowthStatus> growth_status_from_string(std::string_view text) noexcept;

struct MapGrid {
  MapId id = 0;
  int layer = 1;
  std::optional<UnitRef> parent;
  int rows = 0;
  int cols = 0;
  std::vector<Unit> units;  // row-major, rows * cols entries
  double mqe = 0.0;         // mean of qe over winner units
  GrowthStatus status = GrowthStatus::untrained;
  std::vector<double> qe_history;  // mqe after every completed training phase
  std::vector<SampleId> samples;   // samples entering this map
  std::uint64_t seed = 0;
  int phases = 0;

  /// rows x cols lattice with zero weights of dimension `dim`.
  static MapGrid lattice(int rows, int cols, std::size_t dim);

  bool contains(GridPos p) const noexcept {
    return p.row >= 0 && p.col >= 0 && p.row < rows && p.col < cols;
  }
  Unit& at(GridPos p);
  const Unit& at(GridPos p) const;
  std::size_t index(GridPos p) const noexcept {
    return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(p.col);
  }
  std::size_t dim() const noexcept { return units.empty() ? 0 : units.front().weight.size(); }
  int active_units() const noexcept;
  int winner_units() const noexcept;

  bool operator==(const MapGrid&) const = default;
};

/// One automatic or manual growth decision with the statistics that drove it.
struct AuditEntry {
  std::uint64_t seq = 0;  // logical timestamp, strictly increasing per model
  MapId map = 0;
  int row = 0;
  int col = 0;
  std::string rule;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string action;

  bool operator==(const AuditEntry&) const = default;
};

struct Layer0Stats {
  Vector m0;
  double mqe0 = 0.0;
  double qe0 = 0.0;

  bool operator==(const Layer0Stats&) const = default;
};

struct Hierarchy {
  Layer0Stats layer0;
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  MapId root = 0;
  std::map<MapId, MapGrid> maps;
  MapId next_id = 0;
  Params params;
  std::uint64_t seed = 0;
  std::vector<AuditEntry> audit;
  std::uint64_t audit_seq = 0;

  MapGrid& map(MapId id);
  const MapGrid& map(MapId id) const;
  bool has_map(MapId id) const { return maps.count(id) != 0; }

  /// Deepest layer index present (root = 1).
  int depth() const;
  std::size_t unit_count() const;  // active units across all maps

  void log(AuditEntry entry);

  bool operator==(const Hierarchy&) const = default;
};

}  // namespace ghsom
