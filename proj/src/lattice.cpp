#include "ghsom/lattice.hpp"

#include <utility>

namespace ghsom {

Vector midpoint(std::span<const double> a, std::span<const double> b) {
  Vector m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

namespace {

Unit fresh_between(const Unit& a, const Unit& b) {
  Unit u;
  if (a.active && b.active) {
    u.weight = midpoint(a.weight, b.weight);
  } else if (a.active || b.active) {
    u.weight = a.active ? a.weight : b.weight;
  } else {
    u.weight = a.weight;
    u.active = false;
  }
  return u;
}

void renumber(MapGrid& map) {
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      Unit& u = map.units[map.index({r, c})];
      u.row = r;
      u.col = c;
    }
}

}  // namespace

InsertOutcome insert_column(MapGrid& map, int left, int max_units) {
  if (left < 0 || left + 1 >= map.cols) return InsertOutcome::invalid;
  if ((map.cols + 1) * map.rows > max_units) return InsertOutcome::size_cap;
  std::vector<Unit> next;
  next.reserve(static_cast<std::size_t>(map.rows * (map.cols + 1)));
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      next.push_back(std::move(map.units[map.index({r, c})]));
      if (c == left) {
        const Unit& a = next.back();
        const Unit& b = map.units[map.index({r, c + 1})];
        next.push_back(fresh_between(a, b));
      }
    }
  }
  map.units = std::move(next);
  ++map.cols;
  renumber(map);
  clear_statistics(map);
  return InsertOutcome::inserted;
}

InsertOutcome insert_row(MapGrid& map, int top, int max_units) {
  if (top < 0 || top + 1 >= map.rows) return InsertOutcome::invalid;
  if ((map.rows + 1) * map.cols > max_units) return InsertOutcome::size_cap;
  std::vector<Unit> next;
  next.reserve(static_cast<std::size_t>((map.rows + 1) * map.cols));
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) next.push_back(std::move(map.units[map.index({r, c})]));
    if (r == top) {
      for (int c = 0; c < map.cols; ++c) {
        const Unit& a = next[static_cast<std::size_t>(r * map.cols + c)];
        const Unit& b = map.units[map.index({r + 1, c})];
        next.push_back(fresh_between(a, b));
      }
    }
  }
  map.units = std::move(next);
  ++map.rows;
  renumber(map);
  clear_statistics(map);
  return InsertOutcome::inserted;
}

void clear_statistics(MapGrid& map) {
  for (Unit& u : map.units) {
    u.assigned.clear();
    u.qe = 0.0;
    u.mqe = 0.0;
  }
  map.mqe = 0.0;
}

std::vector<GridPos> lattice_neighbors(const MapGrid& map, GridPos p) {
  std::vector<GridPos> out;
  // Row-major order, so callers breaking ties by first occurrence follow it.
  for (const GridPos q : {GridPos{p.row - 1, p.col}, GridPos{p.row, p.col - 1},
                          GridPos{p.row, p.col + 1}, GridPos{p.row + 1, p.col}}) {
    if (map.contains(q) && map.at(q).active) out.push_back(q);
  }
  return out;
}

std::vector<GridPos> moore_neighbors(const MapGrid& map, GridPos p) {
  std::vector<GridPos> out;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const GridPos q{p.row + dr, p.col + dc};
      if (map.contains(q) && map.at(q).active) out.push_back(q);
    }
  return out;
}

}  // namespace ghsom
