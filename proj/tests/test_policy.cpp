#include <doctest.h>

#include <numeric>

#include "ghsom/growth.hpp"
#include "ghsom/policy.hpp"
#include "ghsom/som.hpp"

using namespace ghsom;

namespace {

// A 1x3 map over six 1-d samples: unit (0,0) holds four, the others one each.
struct Fixture {
  FeatureMatrix data{6, 1};
  MapGrid map = MapGrid::lattice(1, 3, 1);
  Params params;

  Fixture() {
    const double xs[] = {0.0, 0.1, 0.2, 0.3, 0.6, 1.0};
    for (std::size_t i = 0; i < 6; ++i) data(i, 0) = xs[i];
    map.at({0, 0}).weight = {0.15};
    map.at({0, 1}).weight = {0.6};
    map.at({0, 2}).weight = {1.0};
    map.samples = {0, 1, 2, 3, 4, 5};
    assign_and_score(map, data, map.samples);
    params.schedules.epochs = 2;
  }

  BuildContext ctx(double qe0) const { return {data, params, qe0, 6, {}}; }
};

}  // namespace

TEST_CASE("case 1 veto is n_k <= alpha * n") {
  CHECK(case1_veto(6, 150, 0.04));
  CHECK_FALSE(case1_veto(7, 150, 0.04));
  CHECK(case1_veto(150, 150, 1.0));
  CHECK_FALSE(case1_veto(1, 150, 0.001));
}

TEST_CASE("case 2 compares qe_k with beta * tau1 * sum of winner qe") {
  Fixture f;
  // qe: unit0 = 0.15+0.05+0.05+0.15 = 0.4, unit1 = 0, unit2 = 0.
  const Case2Check c = case2_insert_check(f.map, {0, 0}, 0.5, 2.0);
  CHECK(c.lhs == doctest::Approx(0.4));
  CHECK(c.rhs == doctest::Approx(2.0 * 0.5 * 0.4));
  CHECK(c.fires);  // qe_k equals the bound
  CHECK_FALSE(case2_insert_check(f.map, {0, 0}, 0.5, 2.1).fires);
  CHECK_FALSE(case2_insert_check(f.map, {0, 1}, 0.01, 0.01).fires);  // zero error never fires
}

TEST_CASE("stratification requires error above tau2 * qe0 and two samples") {
  Fixture f;
  f.params.growth.tau2 = 0.1;
  CHECK(stratification_candidate(f.map, f.map.at({0, 0}), f.ctx(1.0)));   // 0.4 >= 0.1
  CHECK_FALSE(stratification_candidate(f.map, f.map.at({0, 0}), f.ctx(5.0)));
  CHECK_FALSE(stratification_candidate(f.map, f.map.at({0, 1}), f.ctx(1e-9)));  // one sample
  f.params.growth.max_depth = 1;
  CHECK_FALSE(stratification_candidate(f.map, f.map.at({0, 0}), f.ctx(1.0)));
  f.params.growth.max_depth = 5;
  f.params.growth.tau2 = std::numeric_limits<double>::infinity();
  CHECK_FALSE(stratification_candidate(f.map, f.map.at({0, 0}), f.ctx(1.0)));
}

TEST_CASE("policy is a no-op when disabled") {
  Fixture f;
  const MapGrid before = f.map;
  AuditBuffer audit;
  const PolicyOutcome out = apply_policy(f.map, f.ctx(1.0), audit);
  CHECK(out.insertions == 0);
  CHECK(audit.empty());
  CHECK(f.map == before);
}

TEST_CASE("a vetoed candidate is logged and stays without child") {
  Fixture f;
  f.params.interactive.enabled = true;
  f.params.interactive.alpha = 1.0;
  f.params.interactive.beta = 100.0;  // case 2 can never fire
  f.params.growth.tau2 = 0.1;
  AuditBuffer audit;
  const PolicyOutcome out = apply_policy(f.map, f.ctx(1.0), audit);
  CHECK(out.insertions == 0);
  CHECK(out.vetoed == std::set<GridPos>{{0, 0}});
  REQUIRE(audit.size() == 1);
  CHECK(audit[0].rule == "case1_veto");
  CHECK(audit[0].lhs == 4.0);
  CHECK(audit[0].rhs == 6.0);
}

TEST_CASE("case 2 inserts next to the firing unit and retrains") {
  Fixture f;
  f.params.interactive.enabled = true;
  f.params.interactive.beta = 1.0;
  f.params.growth.tau1 = 0.5;
  f.params.growth.tau2 = 0.9;  // nobody stratifies
  f.params.growth.max_map_units = 4;
  AuditBuffer audit;
  const PolicyOutcome out = apply_policy(f.map, f.ctx(1.0), audit);
  CHECK(out.insertions == 1);  // the cap admits exactly one
  CHECK(f.map.units.size() == 4);
  CHECK(f.map.phases == 1);
  REQUIRE(!audit.empty());
  CHECK(audit[0].rule == "case2_insert");
  CHECK(audit[0].row == 0);
  CHECK(audit[0].col == 0);
  CHECK(audit[0].action == "unit inserted");
  CHECK(audit[0].lhs >= audit[0].rhs);
}

TEST_CASE("case 2 at the size cap is refused and leaves the map alone") {
  Fixture f;
  f.params.interactive.enabled = true;
  f.params.interactive.beta = 1.0;
  f.params.growth.tau1 = 0.5;
  f.params.growth.tau2 = 0.9;
  f.params.growth.max_map_units = 3;
  const MapGrid before = f.map;
  AuditBuffer audit;
  const PolicyOutcome out = apply_policy(f.map, f.ctx(1.0), audit);
  CHECK(out.insertions == 0);
  CHECK(out.refused == 1);
  CHECK(f.map == before);
  REQUIRE(audit.size() == 1);
  CHECK(audit[0].action == "refused: size cap");
}
