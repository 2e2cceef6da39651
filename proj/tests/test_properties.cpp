#include <doctest.h>

#include <algorithm>
#include <set>

#include "ghsom/dataset.hpp"
#include "ghsom/evaluation.hpp"
#include "ghsom/growth.hpp"
#include "ghsom/model_io.hpp"
#include "ghsom/rng.hpp"

using namespace ghsom;

namespace {

// Gaussian-ish blobs so the trees have something to find.
FeatureMatrix blobs(Rng& rng, std::size_t n, std::size_t d) {
  const std::size_t k = 1 + rng.below(4);
  std::vector<Vector> centres(k, Vector(d));
  for (auto& c : centres)
    for (double& v : c) v = rng.uniform01();
  FeatureMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& c = centres[rng.below(k)];
    for (std::size_t j = 0; j < d; ++j) {
      double noise = 0.0;
      for (int t = 0; t < 4; ++t) noise += rng.uniform01() - 0.5;
      m(i, j) = c[j] + 0.1 * noise;
    }
  }
  return m;
}

void check_invariants(const Hierarchy& h, const FeatureMatrix& data) {
  const Params& p = h.params;
  std::set<MapId> seen;
  std::vector<MapId> stack{h.root};
  while (!stack.empty()) {
    const MapId id = stack.back();
    stack.pop_back();
    REQUIRE(seen.insert(id).second);  // acyclic
    const MapGrid& m = h.map(id);
    CHECK(m.layer <= p.growth.max_depth);
    CHECK(m.rows * m.cols <= p.growth.max_map_units);
    CHECK(m.active_units() >= 1);
    std::vector<SampleId> held;
    for (const Unit& u : m.units) {
      held.insert(held.end(), u.assigned.begin(), u.assigned.end());
      if (!u.active) CHECK(u.assigned.empty());
      if (u.child) {
        const MapGrid& c = h.map(*u.child);
        CHECK(c.layer == m.layer + 1);
        CHECK(c.parent->map == id);
        stack.push_back(*u.child);
      }
    }
    std::sort(held.begin(), held.end());
    std::vector<SampleId> entered = m.samples;
    std::sort(entered.begin(), entered.end());
    CHECK(held == entered);  // every sample entering a map lands on exactly one unit
  }
  CHECK(seen.size() == h.maps.size());
  CHECK(leaf_assignment(h).size() == data.rows());
  CHECK(hierarchy_qe(h, data).mean_qe <= h.layer0.mqe0 + 1e-12);
}

}  // namespace

TEST_CASE("random datasets: termination, bounds and tree validity") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 4 + rng.below(200);
    const std::size_t d = 1 + rng.below(8);
    const FeatureMatrix data = blobs(rng, n, d);
    Params p;
    p.schedules.epochs = 3;
    p.growth.max_map_units = 4 + static_cast<int>(rng.below(20));
    p.growth.max_depth = 1 + static_cast<int>(rng.below(4));
    p.growth.tau1 = 0.02 + 0.3 * rng.uniform01();
    p.growth.mode = static_cast<GrowthMode>(rng.below(3));
    p.interactive.enabled = rng.below(2) == 1;
    p.interactive.alpha = std::max(1.0 / static_cast<double>(n), rng.uniform01());
    p.interactive.beta = 0.5 + 4 * rng.uniform01();
    const std::uint64_t seed = rng.below(1000);
    CAPTURE(trial);
    const Hierarchy h = train_hierarchy(data, p, seed);
    check_invariants(h, data);
    CHECK(deserialize_model(serialize_model(h)) == h);
  }
}

TEST_CASE("duplicated points do not break growth") {
  FeatureMatrix data(30, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    data(i, 0) = i < 15 ? 0.2 : 0.8;
    data(i, 1) = 0.5;
  }
  Params p;
  p.schedules.epochs = 3;
  for (GrowthMode mode : {GrowthMode::row_column, GrowthMode::unit_level, GrowthMode::hybrid}) {
    p.growth.mode = mode;
    const Hierarchy h = train_hierarchy(data, p, 1);
    check_invariants(h, data);
  }
}

TEST_CASE("audit sequence numbers are strictly increasing") {
  Rng rng(5);
  const FeatureMatrix data = blobs(rng, 120, 3);
  Params p;
  p.schedules.epochs = 3;
  p.interactive.enabled = true;
  const Hierarchy h = train_hierarchy(data, p, 9);
  for (std::size_t i = 1; i < h.audit.size(); ++i) CHECK(h.audit[i].seq > h.audit[i - 1].seq);
  for (const AuditEntry& e : h.audit) CHECK(h.has_map(e.map));
}
