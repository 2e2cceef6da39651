#include <doctest.h>

#include <cmath>
#include <limits>

#include "ghsom/dataset.hpp"
#include "ghsom/error.hpp"
#include "ghsom/evaluation.hpp"
#include "ghsom/growth.hpp"
#include "ghsom/som.hpp"
#include "ghsom/tree_export.hpp"

using namespace ghsom;

namespace {

const Dataset& iris() {
  static const Dataset ds = [] {
    CsvOptions o;
    o.label_column = "class";
    return load_csv(std::string(GHSOM_DATA_DIR) + "/iris.csv", o);
  }();
  return ds;
}

Hierarchy trained(std::uint64_t seed, double tau2 = 0.01) {
  Params p;
  p.schedules.epochs = 5;
  p.growth.tau2 = tau2;
  return train_hierarchy(iris().features, p, seed);
}

// Two-level toy model built by hand so every number is known.
struct Toy {
  FeatureMatrix data{4, 1};
  Dataset labels;
  Hierarchy h;

  Toy() {
    const double xs[] = {0.0, 0.2, 0.9, 1.0};
    for (std::size_t i = 0; i < 4; ++i) data(i, 0) = xs[i];
    labels = make_dataset("toy", {"x"}, data, {"a", "a", "b", "a"}, Normalization::minmax);
    h.n_samples = 4;
    h.dim = 1;
    h.layer0 = layer0_stats(data);
    MapGrid root = MapGrid::lattice(1, 2, 1);
    root.id = 0;
    root.at({0, 0}).weight = {0.1};
    root.at({0, 0}).assigned = {0, 1};
    root.at({0, 1}).weight = {0.95};
    root.at({0, 1}).assigned = {2, 3};
    root.at({0, 1}).child = 1;
    root.samples = {0, 1, 2, 3};
    MapGrid child = MapGrid::lattice(1, 2, 1);
    child.id = 1;
    child.layer = 2;
    child.parent = UnitRef{0, 0, 1};
    child.at({0, 0}).weight = {0.9};
    child.at({0, 0}).assigned = {2};
    child.at({0, 1}).weight = {1.0};
    child.at({0, 1}).assigned = {3};
    child.samples = {2, 3};
    h.maps.emplace(0, root);
    h.maps.emplace(1, child);
    h.next_id = 2;
  }
};

}  // namespace

TEST_CASE("leaf assignment and hierarchy qe on a hand-built tree") {
  Toy t;
  const auto leaves = leaf_assignment(t.h);
  CHECK(leaves[0] == UnitRef{0, 0, 0});
  CHECK(leaves[2] == UnitRef{1, 0, 0});
  CHECK(leaves[3] == UnitRef{1, 0, 1});
  const HierarchyQe q = hierarchy_qe(t.h, t.data);
  CHECK(q.total_qe == doctest::Approx(0.1 + 0.1));
  CHECK(q.mean_qe == doctest::Approx(0.05));
  CHECK(q.mean_squared_qe == doctest::Approx((0.01 + 0.01) / 4));
  CHECK(route(t.h, std::vector<double>{0.97}) == UnitRef{1, 0, 1});
  CHECK(route(t.h, std::vector<double>{0.97}, 1) == UnitRef{0, 0, 1});
}

TEST_CASE("criterion formula") {
  CHECK(model_criterion(150, 0.01, 10, 4) == doctest::Approx(150 * std::log(0.01) + 80));
  CHECK(model_criterion(10, 0.0, 3, 2) == -std::numeric_limits<double>::infinity());
  Toy t;
  CHECK(model_criterion(t.h, t.data) == doctest::Approx(4 * std::log(0.005) + 2 * 4 * 1));
}

TEST_CASE("purity at the leaves and at layer 1") {
  Toy t;
  const PurityReport leaf = class_purity(t.h, t.labels);
  CHECK(leaf.purity == 1.0);
  const PurityReport top = class_purity(t.h, t.labels, 1);
  // root unit (0,1) holds {b, a}: tie broken toward "a"
  CHECK(top.purity == doctest::Approx(0.75));
  CHECK(top.class_recall.at("a") == 1.0);
  CHECK(top.class_recall.at("b") == 0.0);
  Dataset unlabeled = t.labels;
  unlabeled.labels.clear();
  CHECK_THROWS_AS(class_purity(t.h, unlabeled), Error);
}

TEST_CASE("unit colours round half up and clamp") {
  CHECK(unit_color(std::vector<double>{0.0, 1.0, 0.5}) == Rgb{0, 255, 128});
  CHECK(unit_color(std::vector<double>{-1.0, 2.0}) == Rgb{0, 255, 128});
  CHECK(unit_color(std::vector<double>{0.002, 0.2, 0.4}) == Rgb{1, 51, 102});
}

TEST_CASE("deeper trees do not increase leaf error") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Hierarchy flat = trained(seed, std::numeric_limits<double>::infinity());
    const Hierarchy deep = trained(seed);
    CHECK(hierarchy_qe(deep, iris().features).mean_qe <= hierarchy_qe(flat, iris().features).mean_qe);
  }
}

TEST_CASE("qe is below the single-centroid error") {
  const Hierarchy h = trained(1);
  const Summary s = summarize(h, iris().features);
  CHECK(s.mean_qe < h.layer0.mqe0);
  CHECK(s.units == h.unit_count());
  CHECK(s.depth == h.depth());
}

TEST_CASE("shape mismatches are data errors") {
  const Hierarchy h = trained(1);
  FeatureMatrix wrong(10, 4);
  try {
    hierarchy_qe(h, wrong);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data);
  }
}

TEST_CASE("tables and charts") {
  const Hierarchy h = trained(1);
  const std::string csv = unit_table_csv(h, &iris());
  CHECK(csv.rfind("map,layer,row,col,active,samples,qe,mqe,wd,va,color,child,majority\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  std::size_t units = 0;
  for (const auto& [id, m] : h.maps) units += m.units.size();
  CHECK(lines == units + 1);
  CHECK(unit_table_csv(h, nullptr).find("majority") == std::string::npos);

  const std::string hist = qe_history_csv(h);
  CHECK(hist.rfind("map,phase,mqe\n", 0) == 0);
  const std::string svg = qe_history_svg(h);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("tree document") {
  const Hierarchy h = trained(1);
  const nlohmann::json doc = export_tree(h);
  CHECK_NOTHROW(check_tree_version(doc));
  CHECK(doc["map_count"] == h.maps.size());
  CHECK(doc["maps"].size() == h.maps.size());
  for (const auto& m : doc["maps"]) {
    CHECK(m["units"].size() == m["rows"].get<std::size_t>() * m["cols"].get<std::size_t>());
    for (const auto& u : m["units"]) CHECK(u["color"].size() == 3);
  }
  nlohmann::json future = doc;
  future["format_version"] = 99;
  CHECK_THROWS_AS(check_tree_version(future), Error);

  const auto& root = h.map(h.root);
  const Unit& u = root.units.front();
  const nlohmann::json rows = unit_samples(h, iris(), h.root, {u.row, u.col});
  CHECK(rows["rows"].size() == u.assigned.size());
  CHECK(rows["features"].size() == 4);
  if (!u.assigned.empty()) {
    const SampleId s = u.assigned.front();
    CHECK(rows["rows"][0]["values"][0].get<double>() == iris().raw(s, 0));
    CHECK(rows["rows"][0]["label"] == iris().labels[s]);
  }
  CHECK_THROWS_AS(unit_samples(h, iris(), 9999, {0, 0}), Error);
  CHECK_THROWS_AS(unit_samples(h, iris(), h.root, {99, 0}), Error);
}
