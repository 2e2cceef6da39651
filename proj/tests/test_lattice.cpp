#include <doctest.h>

#include "ghsom/growth.hpp"
#include "ghsom/lattice.hpp"

using namespace ghsom;

namespace {

// Weights encode their original position so moves are easy to follow.
MapGrid labelled(int rows, int cols) {
  MapGrid m = MapGrid::lattice(rows, cols, 2);
  for (Unit& u : m.units) u.weight = {static_cast<double>(u.row), static_cast<double>(u.col)};
  return m;
}

}  // namespace

TEST_CASE("column insertion between horizontal neighbours") {
  MapGrid m = labelled(2, 2);
  m.at({0, 0}).qe = 3.0;
  REQUIRE(insert_row_or_column(m, {0, 0}, {0, 1}, 64) == InsertOutcome::inserted);
  CHECK(m.rows == 2);
  CHECK(m.cols == 3);
  CHECK(m.at({0, 1}).weight == Vector{0.0, 0.5});
  CHECK(m.at({1, 1}).weight == Vector{1.0, 0.5});
  CHECK(m.at({0, 2}).weight == Vector{0.0, 1.0});
  CHECK(m.at({1, 2}).weight == Vector{1.0, 1.0});
  for (const Unit& u : m.units) {
    CHECK(u.qe == 0.0);
    CHECK(u.assigned.empty());
  }
}

TEST_CASE("row insertion between vertical neighbours") {
  MapGrid m = labelled(2, 3);
  REQUIRE(insert_row_or_column(m, {1, 2}, {0, 2}, 64) == InsertOutcome::inserted);
  CHECK(m.rows == 3);
  CHECK(m.cols == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(m.at({0, c}).weight == Vector{0.0, static_cast<double>(c)});
    CHECK(m.at({1, c}).weight == Vector{0.5, static_cast<double>(c)});
    CHECK(m.at({2, c}).weight == Vector{1.0, static_cast<double>(c)});
    CHECK(m.at({1, c}).row == 1);
    CHECK(m.at({1, c}).col == c);
  }
}

TEST_CASE("insertion refuses non-neighbours and the size cap") {
  MapGrid m = labelled(2, 2);
  CHECK(insert_row_or_column(m, {0, 0}, {1, 1}, 64) == InsertOutcome::invalid);
  CHECK(insert_row_or_column(m, {0, 0}, {0, 0}, 64) == InsertOutcome::invalid);
  const MapGrid before = m;
  CHECK(insert_row_or_column(m, {0, 0}, {0, 1}, 5) == InsertOutcome::size_cap);
  CHECK(m == before);
  CHECK(insert_row_or_column(m, {0, 0}, {0, 1}, 6) == InsertOutcome::inserted);
}

TEST_CASE("a hole flank copies the active side, two holes stay a hole") {
  MapGrid m = labelled(2, 2);
  m.at({0, 1}).active = false;
  m.at({1, 0}).active = false;
  m.at({1, 1}).active = false;
  REQUIRE(insert_column(m, 0, 64) == InsertOutcome::inserted);
  CHECK(m.at({0, 1}).active);
  CHECK(m.at({0, 1}).weight == Vector{0.0, 0.0});
  CHECK_FALSE(m.at({1, 1}).active);
}

TEST_CASE("error unit selection picks the largest qe and its most distant neighbour") {
  MapGrid m = labelled(3, 3);
  for (Unit& u : m.units) u.assigned = {0};
  m.at({1, 1}).qe = 5.0;
  m.at({0, 0}).qe = 1.0;
  m.at({1, 2}).weight = {1.0, 9.0};
  const auto pair = select_error_unit(m);
  REQUIRE(pair);
  CHECK(pair->e == GridPos{1, 1});
  CHECK(pair->d == GridPos{1, 2});
}

TEST_CASE("neighbourhoods skip holes and the lattice edge") {
  MapGrid m = labelled(3, 3);
  CHECK(lattice_neighbors(m, {0, 0}).size() == 2);
  CHECK(lattice_neighbors(m, {1, 1}).size() == 4);
  CHECK(moore_neighbors(m, {1, 1}).size() == 8);
  CHECK(moore_neighbors(m, {0, 0}).size() == 3);
  m.at({0, 1}).active = false;
  CHECK(lattice_neighbors(m, {1, 1}).size() == 3);
  CHECK(moore_neighbors(m, {0, 0}).size() == 2);
}

TEST_CASE("child map blends a quarter toward the lattice neighbours") {
  MapGrid parent = MapGrid::lattice(3, 3, 2);
  for (Unit& u : parent.units) u.weight = {u.row * 1.0, u.col * 10.0};
  parent.at({1, 1}).assigned = {4, 7};
  parent.id = 3;
  parent.layer = 2;
  parent.seed = 99;
  const MapGrid child = make_child_map(parent, {1, 1});
  CHECK(child.rows == 2);
  CHECK(child.cols == 2);
  CHECK(child.layer == 3);
  REQUIRE(child.parent);
  CHECK(*child.parent == UnitRef{3, 1, 1});
  CHECK(child.samples == std::vector<SampleId>{4, 7});
  // up: (0,10) - (1,10) = (-1,0); left: (1,0) - (1,10) = (0,-10)
  CHECK(child.at({0, 0}).weight == Vector{1.0 - 0.25, 10.0 - 2.5});
  CHECK(child.at({0, 1}).weight == Vector{1.0 - 0.25, 10.0 + 2.5});
  CHECK(child.at({1, 0}).weight == Vector{1.0 + 0.25, 10.0 - 2.5});
  CHECK(child.at({1, 1}).weight == Vector{1.0 + 0.25, 10.0 + 2.5});

  // Corner unit: missing neighbours mirror the opposite side.
  const MapGrid corner = make_child_map(parent, {0, 0});
  CHECK(corner.at({0, 0}).weight == Vector{-0.25, -2.5});
  CHECK(corner.at({1, 1}).weight == Vector{0.25, 2.5});
}

TEST_CASE("child seeds differ by position and are reproducible") {
  MapGrid parent = labelled(2, 2);
  parent.seed = 5;
  CHECK(make_child_map(parent, {0, 1}).seed == make_child_map(parent, {0, 1}).seed);
  CHECK(make_child_map(parent, {0, 1}).seed != make_child_map(parent, {1, 0}).seed);
}
