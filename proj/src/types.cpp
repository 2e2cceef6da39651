#include "ghsom/types.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <utility>

#include "ghsom/error.hpp"

namespace ghsom {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::data: return "data";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::version: return "version";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::state: return "state";
    case ErrorCode::busy: return "busy";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) fail(ErrorCode::data, "row width does not match matrix dimension");
  values_.insert(values_.end(), values.begin(), values.end());
  ++rows_;
}

namespace {

constexpr std::array<std::pair<GrowthStatus, const char*>, 8> kStatusNames{{
    {GrowthStatus::untrained, "untrained"},
    {GrowthStatus::converged, "converged"},
    {GrowthStatus::size_cap, "size_cap"},
    {GrowthStatus::no_neighbor, "no_neighbor"},
    {GrowthStatus::generation_threshold, "generation_threshold"},
    {GrowthStatus::cycle_limit, "cycle_limit"},
    {GrowthStatus::zero_error, "zero_error"},
    {GrowthStatus::empty, "empty"},
}};

}  // namespace

const char* to_string(GrowthStatus status) noexcept {
  for (const auto& [s, name] : kStatusNames)
    if (s == status) return name;
  return "unknown";
}

std::optional<GrowthStatus> growth_status_from_string(std::string_view text) noexcept {
  for (const auto& [s, name] : kStatusNames)
    if (text == name) return s;
  return std::nullopt;
}

MapGrid MapGrid::lattice(int rows, int cols, std::size_t dim) {
  MapGrid m;
  m.rows = rows;
  m.cols = cols;
  m.units.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Unit u;
      u.row = r;
      u.col = c;
      u.weight.assign(dim, 0.0);
      m.units.push_back(std::move(u));
    }
  return m;
}

Unit& MapGrid::at(GridPos p) {
  if (!contains(p))
    fail(ErrorCode::not_found, "unit (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                                   ") outside " + std::to_string(rows) + "x" +
                                   std::to_string(cols) + " map " + std::to_string(id));
  return units[index(p)];
}

const Unit& MapGrid::at(GridPos p) const { return const_cast<MapGrid*>(this)->at(p); }

int MapGrid::active_units() const noexcept {
  return static_cast<int>(std::count_if(units.begin(), units.end(), [](const Unit& u) { return u.active; }));
}

int MapGrid::winner_units() const noexcept {
  return static_cast<int>(
      std::count_if(units.begin(), units.end(), [](const Unit& u) { return u.is_winner(); }));
}

MapGrid& Hierarchy::map(MapId id) {
  auto it = maps.find(id);
  if (it == maps.end()) fail(ErrorCode::not_found, "unknown map id " + std::to_string(id));
  return it->second;
}

const MapGrid& Hierarchy::map(MapId id) const { return const_cast<Hierarchy*>(this)->map(id); }

int Hierarchy::depth() const {
  int d = 0;
  for (const auto& [id, m] : maps) d = std::max(d, m.layer);
  return d;
}

std::size_t Hierarchy::unit_count() const {
  std::size_t n = 0;
  for (const auto& [id, m] : maps) n += static_cast<std::size_t>(m.active_units());
  return n;
}

void Hierarchy::log(AuditEntry entry) {
  entry.seq = ++audit_seq;
  audit.push_back(std::move(entry));
}

}  // namespace ghsom
