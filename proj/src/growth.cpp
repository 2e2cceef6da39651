#include "ghsom/growth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <string>
#include <utility>

#include "ghsom/adaptive.hpp"
#include "ghsom/config.hpp"
#include "ghsom/error.hpp"
#include "ghsom/policy.hpp"
#include "ghsom/rng.hpp"
#include "ghsom/som.hpp"

namespace ghsom {

std::optional<ErrorUnitPair> select_error_unit(const MapGrid& map) {
  const Unit* e = nullptr;
  for (const Unit& u : map.units) {
    if (!u.is_winner()) continue;
    if (e == nullptr || u.qe > e->qe) e = &u;
  }
  if (e == nullptr) fail(ErrorCode::degenerate, "map " + std::to_string(map.id) + " has no winner unit");

  const GridPos epos{e->row, e->col};
  std::optional<GridPos> d;
  double farthest = -1.0;
  for (const GridPos q : lattice_neighbors(map, epos)) {
    const double dist = distance(e->weight, map.at(q).weight);
    if (dist > farthest) {
      farthest = dist;
      d = q;
    }
  }
  if (!d) return std::nullopt;
  return ErrorUnitPair{epos, *d};
}

InsertOutcome insert_row_or_column(MapGrid& map, GridPos e, GridPos d, int max_units) {
  const int dr = std::abs(e.row - d.row);
  const int dc = std::abs(e.col - d.col);
  if (dr + dc != 1 || !map.contains(e) || !map.contains(d)) return InsertOutcome::invalid;
  if (dr == 0) return insert_column(map, std::min(e.col, d.col), max_units);
  return insert_row(map, std::min(e.row, d.row), max_units);
}

double parent_reference(double parent_qe, std::size_t parent_count, Tau1Reference ref) noexcept {
  if (ref == Tau1Reference::sum || parent_count == 0) return parent_qe;
  return parent_qe / static_cast<double>(parent_count);
}

void run_training_phase(MapGrid& map, const BuildContext& ctx) {
  const std::uint64_t phase_seed = mix_seed(map.seed, 0x100u + static_cast<std::uint64_t>(map.phases));
  train_map(map, ctx.data, map.samples, ctx.params.schedules, phase_seed, ctx.params.adaptive);
  ++map.phases;
  assign_and_score(map, ctx.data, map.samples);
  map.qe_history.push_back(map.mqe);
  if (ctx.on_phase) ctx.on_phase(map);
}

int elimination_sweep(MapGrid& map, const BuildContext& ctx, AuditBuffer& audit) {
  const auto indicators = nearest_indicators(map, ctx.data, map.samples);
  std::vector<std::pair<GridPos, EliminationVerdict>> flagged;
  for (const Unit& u : map.units) {
    if (!u.active) continue;
    const GridPos p{u.row, u.col};
    auto verdict = should_eliminate(map, p, indicators, ctx.params.adaptive);
    if (verdict.eliminate) flagged.emplace_back(p, verdict);
  }
  int removed = 0;
  for (const auto& [p, verdict] : flagged) {
    if (map.active_units() <= 1) break;
    eliminate_unit(map, p, /*compact=*/false);
    const double threshold = verdict.reason == EliminationReason::inactive
                                 ? ctx.params.adaptive.theta_e
                                 : ctx.params.adaptive.theta_c;
    audit.push_back({0, map.id, p.row, p.col, std::string("eliminate_") + to_string(verdict.reason),
                     verdict.value, threshold, "eliminated"});
    ++removed;
  }
  if (removed > 0) {
    compact_lattice(map);
    assign_and_score(map, ctx.data, map.samples);
  }
  return removed;
}

namespace {

// Unit-level generation: the winner with the largest error-share * WD score
// spawns a unit next to itself when the score passes theta_G.
GrowthStatus generate_unit(MapGrid& map, const BuildContext& ctx, AuditBuffer& audit) {
  const auto& gp = ctx.params.growth;
  std::optional<GridPos> best;
  double best_score = 0.0;
  for (const Unit& u : map.units) {
    if (!u.is_winner()) continue;
    const double s = generation_score(map, {u.row, u.col});
    if (!best || s > best_score) {
      best = GridPos{u.row, u.col};
      best_score = s;
    }
  }
  if (!best || best_score <= ctx.params.adaptive.theta_g) return GrowthStatus::generation_threshold;

  std::vector<GridPos> hood{*best};
  for (const GridPos q : lattice_neighbors(map, *best)) hood.push_back(q);
  const Placement placed = place_generated_unit(map, hood, gp.max_map_units);
  audit.push_back({0, map.id, best->row, best->col, "generate", best_score,
                   ctx.params.adaptive.theta_g,
                   placed.outcome == InsertOutcome::inserted ? "inserted" : "refused"});
  if (placed.outcome == InsertOutcome::size_cap) return GrowthStatus::size_cap;
  if (placed.outcome == InsertOutcome::invalid) return GrowthStatus::no_neighbor;
  return GrowthStatus::untrained;  // keep growing
}

}  // namespace

GrowthStatus grow_map(MapGrid& map, double parent_ref, const BuildContext& ctx, AuditBuffer& audit) {
  if (map.samples.empty()) {
    map.status = GrowthStatus::empty;
    return map.status;
  }
  const auto& gp = ctx.params.growth;
  const double threshold = gp.tau1 * parent_ref;
  const int max_cycles = 4 * gp.max_map_units;
  const bool unit_level = gp.mode == GrowthMode::unit_level;

  for (int cycle = 0;; ++cycle) {
    run_training_phase(map, ctx);
    // Elimination needs one full phase of tracker history first.
    if (unit_level && map.phases >= 2) elimination_sweep(map, ctx, audit);

    if (parent_ref <= 0.0) {
      map.status = GrowthStatus::zero_error;
      break;
    }
    if (map_mqe(map) < threshold) {
      map.status = GrowthStatus::converged;
      break;
    }
    if (cycle + 1 >= max_cycles) {
      map.status = GrowthStatus::cycle_limit;
      break;
    }

    if (unit_level) {
      const GrowthStatus s = generate_unit(map, ctx, audit);
      if (s != GrowthStatus::untrained) {
        map.status = s;
        break;
      }
      continue;
    }

    const auto pair = select_error_unit(map);
    if (!pair) {
      map.status = GrowthStatus::no_neighbor;
      break;
    }
    const double mqe_before = map_mqe(map);
    const bool inserted =
        insert_row_or_column(map, pair->e, pair->d, gp.max_map_units) == InsertOutcome::inserted;
    audit.push_back({0, map.id, pair->e.row, pair->e.col, "grow", mqe_before, threshold,
                     inserted ? "inserted" : "refused"});
    if (!inserted) {
      map.status = GrowthStatus::size_cap;
      break;
    }
  }

  if (gp.mode == GrowthMode::hybrid && map.active_units() > 1) {
    if (elimination_sweep(map, ctx, audit) > 0) {
      const GrowthStatus keep = map.status;
      run_training_phase(map, ctx);
      map.status = keep;
    }
  }
  map.mqe = map.winner_units() > 0 ? map_mqe(map) : 0.0;
  return map.status;
}

MapGrid make_child_map(const MapGrid& parent, GridPos pos) {
  const Unit& p = parent.at(pos);
  const std::size_t dim = p.weight.size();

  auto neighbor = [&](int dr, int dc) -> const Vector* {
    const GridPos q{pos.row + dr, pos.col + dc};
    if (!parent.contains(q) || !parent.at(q).active) return nullptr;
    return &parent.at(q).weight;
  };
  // Offset toward a neighbour; mirrored from the opposite side at the edge.
  auto offset = [&](const Vector* toward, const Vector* opposite) {
    Vector o(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      if (toward) o[i] = (*toward)[i] - p.weight[i];
      else if (opposite) o[i] = p.weight[i] - (*opposite)[i];
    }
    return o;
  };
  const Vector* up = neighbor(-1, 0);
  const Vector* down = neighbor(1, 0);
  const Vector* left = neighbor(0, -1);
  const Vector* right = neighbor(0, 1);
  const Vector off_up = offset(up, down);
  const Vector off_down = offset(down, up);
  const Vector off_left = offset(left, right);
  const Vector off_right = offset(right, left);

  MapGrid child = MapGrid::lattice(2, 2, dim);
  const Vector* vertical[2] = {&off_up, &off_down};
  const Vector* horizontal[2] = {&off_left, &off_right};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      Vector& w = child.at({r, c}).weight;
      for (std::size_t i = 0; i < dim; ++i)
        w[i] = p.weight[i] + 0.25 * (*vertical[r])[i] + 0.25 * (*horizontal[c])[i];
    }
  child.layer = parent.layer + 1;
  child.parent = UnitRef{parent.id, pos.row, pos.col};
  child.samples = p.assigned;
  child.seed = mix_seed(mix_seed(parent.seed, static_cast<std::uint64_t>(pos.row)),
                        static_cast<std::uint64_t>(pos.col));
  return child;
}

namespace {

std::atomic<int> g_workers{0};

struct SubtreeResult {
  std::vector<MapGrid> maps;
  AuditBuffer audit;
};

// Shifts local ids of a detached subtree by `offset`. The subtree root's
// parent link is left for the caller.
void shift_ids(std::vector<MapGrid>& maps, AuditBuffer& audit, MapId offset) {
  for (std::size_t i = 0; i < maps.size(); ++i) {
    MapGrid& m = maps[i];
    m.id += offset;
    if (i > 0 && m.parent) m.parent->map += offset;
    for (Unit& u : m.units)
      if (u.child) *u.child += offset;
  }
  for (AuditEntry& e : audit) e.map += offset;
}

}  // namespace

std::vector<MapGrid> build_subtree(MapGrid map, double parent_ref, const BuildContext& ctx,
                                   AuditBuffer& audit) {
  map.id = 0;
  grow_map(map, parent_ref, ctx, audit);

  BuildContext inner{ctx.data, ctx.params, ctx.qe0, ctx.n_total, {}};
  const PolicyOutcome policy = apply_policy(map, inner, audit);

  std::vector<GridPos> targets;
  for (const Unit& u : map.units) {
    if (!stratification_candidate(map, u, inner)) continue;
    const GridPos p{u.row, u.col};
    if (policy.vetoed.count(p)) continue;
    audit.push_back({0, map.id, p.row, p.col, "stratify", u.qe, ctx.params.growth.tau2 * ctx.qe0,
                     "child map"});
    targets.push_back(p);
  }

  auto build_child = [&inner, &map](GridPos p) {
    SubtreeResult r;
    const Unit& u = map.at(p);
    const double ref =
        parent_reference(u.qe, u.assigned.size(), inner.params.growth.tau1_reference);
    r.maps = build_subtree(make_child_map(map, p), ref, inner, r.audit);
    return r;
  };

  std::vector<SubtreeResult> children(targets.size());
  if (ctx.params.jobs > 1 && targets.size() > 1) {
    std::vector<std::future<SubtreeResult>> pending(targets.size());
    std::vector<bool> threaded(targets.size(), false);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (g_workers.fetch_add(1) < ctx.params.jobs - 1) {
        threaded[i] = true;
        pending[i] = std::async(std::launch::async, [&, i] {
          struct Release {
            ~Release() { g_workers.fetch_sub(1); }
          } release;
          return build_child(targets[i]);
        });
      } else {
        g_workers.fetch_sub(1);
      }
    }
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (!threaded[i]) children[i] = build_child(targets[i]);
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (threaded[i]) children[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < targets.size(); ++i) children[i] = build_child(targets[i]);
  }

  std::vector<MapGrid> out;
  out.push_back(std::move(map));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& [maps, child_audit] = children[i];
    const auto offset = static_cast<MapId>(out.size());
    shift_ids(maps, child_audit, offset);
    maps.front().parent = UnitRef{0, targets[i].row, targets[i].col};
    out.front().at(targets[i]).child = offset;
    for (MapGrid& m : maps) out.push_back(std::move(m));
    audit.insert(audit.end(), child_audit.begin(), child_audit.end());
  }
  return out;
}

MapId splice_subtree(Hierarchy& h, std::vector<MapGrid> subtree, AuditBuffer audit,
                     std::optional<UnitRef> parent, std::optional<MapId> root_id) {
  if (subtree.empty()) fail(ErrorCode::internal, "empty subtree");
  // Local id 0 is the root; descendants 1..n-1 map onto fresh global ids.
  const MapId base = h.next_id - 1;
  const MapId root = root_id ? *root_id : h.next_id;
  auto global = [&](MapId local) { return local == 0 ? root : base + local + (root_id ? 0 : 1); };

  for (std::size_t i = 0; i < subtree.size(); ++i) {
    MapGrid& m = subtree[i];
    m.id = global(m.id);
    if (i > 0 && m.parent) m.parent->map = global(m.parent->map);
    for (Unit& u : m.units)
      if (u.child) u.child = global(*u.child);
  }
  subtree.front().parent = parent;
  for (AuditEntry& e : audit) e.map = global(e.map);

  const auto fresh = static_cast<MapId>(subtree.size()) - (root_id ? 1 : 0);
  h.next_id += fresh;
  if (parent) h.map(parent->map).at(parent->pos()).child = root;
  else h.root = root;
  for (MapGrid& m : subtree) {
    const MapId id = m.id;
    h.maps.insert_or_assign(id, std::move(m));
  }
  for (AuditEntry& e : audit) h.log(std::move(e));
  return root;
}

Hierarchy train_hierarchy(const FeatureMatrix& data, const Params& params, std::uint64_t seed,
                          PhaseCallback on_phase) {
  if (data.empty()) fail(ErrorCode::invalid_argument, "empty dataset");
  validate(params, data.rows());

  Hierarchy h;
  h.layer0 = layer0_stats(data);
  h.n_samples = data.rows();
  h.dim = data.dim();
  h.params = params;
  h.seed = seed;

  MapGrid root = MapGrid::lattice(2, 2, data.dim());
  root.layer = 1;
  root.seed = mix_seed(seed, 0);
  randomize_weights(root, data.dim(), mix_seed(root.seed, 0xfeed));
  root.samples.resize(data.rows());
  std::iota(root.samples.begin(), root.samples.end(), SampleId{0});

  const BuildContext ctx{data, h.params, h.layer0.qe0, h.n_samples, std::move(on_phase)};
  AuditBuffer audit;
  const double ref =
      parent_reference(h.layer0.qe0, h.n_samples, params.growth.tau1_reference);
  auto subtree = build_subtree(std::move(root), ref, ctx, audit);
  splice_subtree(h, std::move(subtree), std::move(audit), std::nullopt);
  return h;
}

namespace {

void erase_subtree(Hierarchy& h, MapId id) {
  std::vector<MapId> stack{id};
  while (!stack.empty()) {
    const MapId cur = stack.back();
    stack.pop_back();
    for (const Unit& u : h.map(cur).units)
      if (u.child) stack.push_back(*u.child);
    h.maps.erase(cur);
  }
}

}  // namespace

void prune_subtree(Hierarchy& h, MapId map, GridPos pos) {
  Unit& u = h.map(map).at(pos);
  if (!u.child) fail(ErrorCode::state, "unit has no child map to prune");
  const MapId child = *u.child;
  erase_subtree(h, child);
  u.child.reset();
  h.log({0, map, pos.row, pos.col, "prune", static_cast<double>(child), 0.0, "subtree removed"});
}

MapId expand_unit(Hierarchy& h, const FeatureMatrix& data, MapId map, GridPos pos, bool manual) {
  MapGrid& m = h.map(map);
  const Unit& u = m.at(pos);
  if (!u.active) fail(ErrorCode::state, "unit is eliminated");
  if (u.child) fail(ErrorCode::state, "unit already has a child map");
  if (u.assigned.size() < 2)
    fail(ErrorCode::state,
         "unit holds fewer than 2 samples; a child map over so few samples cannot refine it "
         "(the sample-count veto exists for this reason)");

  const BuildContext ctx{data, h.params, h.layer0.qe0, h.n_samples, {}};
  const bool automatic_yes = stratification_candidate(m, u, ctx) &&
                             !(h.params.interactive.enabled &&
                               case1_veto(u.assigned.size(), h.n_samples, h.params.interactive.alpha));
  AuditEntry head{0, map, pos.row, pos.col, manual ? "manual_expand" : "expand", u.qe,
                  h.params.growth.tau2 * h.layer0.qe0,
                  manual && !automatic_yes ? "manual override" : "child map"};

  AuditBuffer audit;
  const double ref = parent_reference(u.qe, u.assigned.size(), h.params.growth.tau1_reference);
  auto subtree = build_subtree(make_child_map(m, pos), ref, ctx, audit);
  h.log(std::move(head));
  return splice_subtree(h, std::move(subtree), std::move(audit), UnitRef{map, pos.row, pos.col});
}

void recluster_map(Hierarchy& h, const FeatureMatrix& data, MapId id, const Params& params,
                   std::uint64_t seed, PhaseCallback on_phase) {
  validate(params, h.n_samples);
  MapGrid& old = h.map(id);
  for (Unit& u : old.units)
    if (u.child) {
      erase_subtree(h, *u.child);
      u.child.reset();
    }

  MapGrid fresh;
  double ref = 0.0;
  if (!old.parent) {
    fresh = MapGrid::lattice(2, 2, h.dim);
    randomize_weights(fresh, h.dim, mix_seed(seed, 0xfeed));
    ref = parent_reference(h.layer0.qe0, h.n_samples, params.growth.tau1_reference);
  } else {
    const MapGrid& parent = h.map(old.parent->map);
    const Unit& pu = parent.at(old.parent->pos());
    fresh = make_child_map(parent, old.parent->pos());
    ref = parent_reference(pu.qe, pu.assigned.size(), params.growth.tau1_reference);
  }
  fresh.layer = old.layer;
  fresh.samples = old.samples;
  fresh.seed = seed;

  const BuildContext ctx{data, params, h.layer0.qe0, h.n_samples, std::move(on_phase)};
  AuditBuffer audit;
  auto subtree = build_subtree(std::move(fresh), ref, ctx, audit);
  const auto parent = old.parent;
  h.log({0, id, 0, 0, "recluster", static_cast<double>(seed & 0xffffffffu), 0.0, "map rebuilt"});
  splice_subtree(h, std::move(subtree), std::move(audit), parent, id);
}

void relink_children(Hierarchy& h, MapId id) {
  const MapGrid& m = h.map(id);
  for (const Unit& u : m.units)
    if (u.child) h.map(*u.child).parent = UnitRef{id, u.row, u.col};
}

void eliminate_unit(Hierarchy& h, const FeatureMatrix& data, MapId id, GridPos pos) {
  {
    Unit& u = h.map(id).at(pos);
    if (u.child) {
      erase_subtree(h, *u.child);
      u.child.reset();
    }
  }
  MapGrid& m = h.map(id);
  std::vector<std::vector<SampleId>> before;
  for (const Unit& u : m.units) before.push_back(u.assigned);
  eliminate_unit(m, pos, /*compact=*/false);
  h.log({0, id, pos.row, pos.col, "eliminate_manual", 0.0, 0.0, "eliminated"});
  assign_and_score(m, data, m.samples);

  // Children of units whose sample set changed are rebuilt over the new set.
  std::vector<GridPos> stale;
  for (std::size_t i = 0; i < m.units.size(); ++i) {
    const Unit& u = m.units[i];
    if (u.child && u.assigned != before[i]) stale.push_back({u.row, u.col});
  }
  for (const GridPos p : stale) {
    Unit& u = h.map(id).at(p);
    const MapId child = *u.child;
    if (u.assigned.size() < 2) {
      prune_subtree(h, id, p);
      continue;
    }
    h.map(child).samples = u.assigned;
    recluster_map(h, data, child, h.params, h.map(child).seed);
  }

  compact_lattice(h.map(id));
  relink_children(h, id);
}

}  // namespace ghsom
