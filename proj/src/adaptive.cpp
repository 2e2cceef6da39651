#include "ghsom/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ghsom/error.hpp"

namespace ghsom {

double eu_met(std::span<const double> x, std::span<const double> y) noexcept {
  const std::size_t n = std::max(x.size(), y.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < x.size() ? x[i] : 0.0;
    const double b = i < y.size() ? y[i] : 0.0;
    sum += (a - b) * (a - b);
  }
  return std::sqrt(sum);
}

double update_wd(double wd_prev, std::span<const double> w_now, std::span<const double> w_prev,
                 double gamma_w) noexcept {
  return gamma_w * wd_prev + (1.0 - gamma_w) * eu_met(w_now, w_prev);
}

Activity update_va(double va_prev, double act_prev, double o_now, double gamma_v,
                   double gamma_a) noexcept {
  Activity next;
  next.act = gamma_a * act_prev + (1.0 - gamma_a) * o_now;
  const double dev = o_now - next.act;
  next.va = gamma_v * va_prev + (1.0 - gamma_v) * dev * dev;
  return next;
}

double generation_score(const MapGrid& map, GridPos unit) {
  double total = 0.0;
  for (const Unit& u : map.units)
    if (u.is_winner()) total += u.qe;
  if (total <= 0.0) return 0.0;
  const Unit& u = map.at(unit);
  if (!u.is_winner()) return 0.0;
  return (u.qe / total) * u.wd;
}

namespace {

// Largest walking distance; first in row-major order on ties.
GridPos max_wd(const MapGrid& map, std::vector<GridPos> candidates) {
  std::sort(candidates.begin(), candidates.end());
  GridPos best = candidates.front();
  for (const GridPos p : candidates)
    if (map.at(p).wd > map.at(best).wd) best = p;
  return best;
}

Placement place_pair(MapGrid& map, GridPos first, GridPos second, int max_units) {
  Placement out;
  out.first = first;
  out.second = second;
  if (first.row == second.row) {
    const int left = std::min(first.col, second.col);
    out.outcome = insert_column(map, left, max_units);
    out.inserted = {first.row, left + 1};
  } else if (first.col == second.col) {
    const int top = std::min(first.row, second.row);
    out.outcome = insert_row(map, top, max_units);
    out.inserted = {top + 1, first.col};
  } else {
    out.diagonal = true;
    const Vector average = midpoint(map.at(first).weight, map.at(second).weight);
    const int top = std::min(first.row, second.row);
    out.outcome = insert_row(map, top, max_units);
    out.inserted = {top + 1, first.col};
    if (out.outcome == InsertOutcome::inserted) {
      Unit& u = map.at(out.inserted);
      u.weight = average;
      u.active = true;
    }
  }
  return out;
}

}  // namespace

Placement place_generated_unit(MapGrid& map, std::span<const GridPos> neighborhood,
                               int max_units) {
  std::vector<GridPos> pool;
  for (const GridPos p : neighborhood)
    if (map.contains(p) && map.at(p).active) pool.push_back(p);
  if (pool.empty()) return {};
  const GridPos first = max_wd(map, pool);

  const auto adjacent = moore_neighbors(map, first);
  std::vector<GridPos> partners;
  for (const GridPos p : pool)
    if (std::find(adjacent.begin(), adjacent.end(), p) != adjacent.end()) partners.push_back(p);
  if (partners.empty()) partners = adjacent;
  if (partners.empty()) return {};
  return place_pair(map, first, max_wd(map, partners), max_units);
}

Placement place_unit_at(MapGrid& map, GridPos anchor, int max_units) {
  const auto adjacent = moore_neighbors(map, anchor);
  if (adjacent.empty() || !map.at(anchor).active) return {};
  return place_pair(map, anchor, max_wd(map, adjacent), max_units);
}

std::vector<std::vector<double>> nearest_indicators(const MapGrid& map, const FeatureMatrix& data,
                                                    std::span<const SampleId> samples) {
  std::vector<std::vector<double>> out(map.units.size(), std::vector<double>(samples.size(), 0.0));
  std::vector<double> d2(map.units.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto x = data.row(samples[s]);
    double best = INFINITY;
    for (std::size_t i = 0; i < map.units.size(); ++i) {
      const Unit& u = map.units[i];
      if (!u.active) continue;
      double sum = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) sum += (x[j] - u.weight[j]) * (x[j] - u.weight[j]);
      d2[i] = sum;
      best = std::min(best, sum);
    }
    for (std::size_t i = 0; i < map.units.size(); ++i)
      if (map.units[i].active && d2[i] == best) out[i][s] = 1.0;
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::invalid_argument, "pearson: length mismatch");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

const char* to_string(EliminationReason reason) noexcept {
  switch (reason) {
    case EliminationReason::none: return "none";
    case EliminationReason::inactive: return "inactive";
    case EliminationReason::redundant: return "redundant";
  }
  return "unknown";
}

EliminationVerdict should_eliminate(const MapGrid& map, GridPos unit,
                                    const std::vector<std::vector<double>>& indicators,
                                    const AdaptiveParams& params) {
  EliminationVerdict v;
  const Unit& u = map.at(unit);
  if (!u.active) return v;
  if (u.va < params.theta_e) {
    v.eliminate = true;
    v.reason = EliminationReason::inactive;
    v.value = u.va;
    return v;
  }
  const std::size_t i = map.index(unit);
  if (indicators.size() != map.units.size())
    fail(ErrorCode::invalid_argument, "indicator table does not match map");
  for (std::size_t j = 0; j < i; ++j) {
    if (!map.units[j].active) continue;
    const double r = pearson(indicators[i], indicators[j]);
    if (r >= params.theta_c) {
      v.eliminate = true;
      v.reason = EliminationReason::redundant;
      v.value = r;
      v.partner = {map.units[j].row, map.units[j].col};
      return v;
    }
  }
  return v;
}

namespace {

void drop_row(MapGrid& map, int row) {
  std::vector<Unit> next;
  for (Unit& u : map.units)
    if (u.row != row) next.push_back(std::move(u));
  map.units = std::move(next);
  --map.rows;
}

void drop_col(MapGrid& map, int col) {
  std::vector<Unit> next;
  for (Unit& u : map.units)
    if (u.col != col) next.push_back(std::move(u));
  map.units = std::move(next);
  --map.cols;
}

}  // namespace

void eliminate_unit(MapGrid& map, GridPos unit, bool compact) {
  Unit& u = map.at(unit);
  if (!u.active) fail(ErrorCode::state, "unit is already eliminated");
  if (map.active_units() <= 1) fail(ErrorCode::state, "cannot eliminate the last unit of a map");
  u.active = false;
  u.assigned.clear();
  u.qe = u.mqe = u.wd = u.va = u.act = 0.0;
  if (compact) compact_lattice(map);
}

void compact_lattice(MapGrid& map) {
  for (int r = map.rows - 1; r >= 0; --r) {
    bool empty = true;
    for (int c = 0; c < map.cols && empty; ++c) empty = !map.at({r, c}).active;
    if (empty && map.rows > 1) drop_row(map, r);
  }
  for (int c = map.cols - 1; c >= 0; --c) {
    bool empty = true;
    for (int r = 0; r < map.rows && empty; ++r) empty = !map.units[map.index({r, c})].active;
    if (empty && map.cols > 1) drop_col(map, c);
  }
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      Unit& v = map.units[map.index({r, c})];
      v.row = r;
      v.col = c;
    }
}

}  // namespace ghsom
