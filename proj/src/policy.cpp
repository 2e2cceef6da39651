#include "ghsom/policy.hpp"

#include <optional>

#include "ghsom/adaptive.hpp"
#include "ghsom/growth.hpp"

namespace ghsom {

bool case1_veto(std::size_t n_k, std::size_t n_total, double alpha) noexcept {
  return static_cast<double>(n_k) <= alpha * static_cast<double>(n_total);
}

Case2Check case2_insert_check(const MapGrid& map, GridPos unit, double tau1, double beta) {
  Case2Check c;
  double sum = 0.0;
  for (const Unit& u : map.units)
    if (u.is_winner()) sum += u.qe;
  const Unit& k = map.at(unit);
  c.lhs = k.is_winner() ? k.qe : 0.0;
  c.rhs = beta * tau1 * sum;
  c.fires = c.lhs > 0.0 && c.lhs >= c.rhs;
  return c;
}

bool stratification_candidate(const MapGrid& map, const Unit& unit, const BuildContext& ctx) {
  const auto& gp = ctx.params.growth;
  if (gp.stratification_off() || map.layer >= gp.max_depth) return false;
  if (!unit.is_winner() || unit.assigned.size() < 2) return false;
  const double threshold = gp.tau2 * ctx.qe0;
  return threshold > 0.0 && unit.qe >= threshold;
}

PolicyOutcome apply_policy(MapGrid& map, const BuildContext& ctx, AuditBuffer& audit) {
  PolicyOutcome out;
  const auto& ip = ctx.params.interactive;
  if (!ip.enabled) return out;

  struct Firing {
    GridPos pos;
    Case2Check check;
  };

  for (;;) {
    std::set<GridPos> vetoed;
    std::vector<AuditEntry> veto_entries;
    std::optional<Firing> best;
    for (const Unit& u : map.units) {
      if (!u.is_winner()) continue;
      const GridPos p{u.row, u.col};
      const bool candidate = stratification_candidate(map, u, ctx);
      const bool veto = candidate && case1_veto(u.assigned.size(), ctx.n_total, ip.alpha);
      if (veto) {
        vetoed.insert(p);
        veto_entries.push_back({0, map.id, p.row, p.col, "case1_veto",
                                static_cast<double>(u.assigned.size()),
                                ip.alpha * static_cast<double>(ctx.n_total), "no child map"});
      }
      if (candidate && !veto) continue;
      const Case2Check c = case2_insert_check(map, p, ctx.params.growth.tau1, ip.beta);
      if (c.fires && (!best || c.lhs > best->check.lhs)) best = Firing{p, c};
    }

    if (!best) {
      out.vetoed = std::move(vetoed);
      audit.insert(audit.end(), veto_entries.begin(), veto_entries.end());
      return out;
    }

    const Placement placed = place_unit_at(map, best->pos, ctx.params.growth.max_map_units);
    const bool ok = placed.outcome == InsertOutcome::inserted;
    audit.push_back({0, map.id, best->pos.row, best->pos.col, "case2_insert", best->check.lhs,
                     best->check.rhs, ok ? "unit inserted" : "refused: size cap"});
    if (!ok) {
      ++out.refused;
      out.vetoed = std::move(vetoed);
      audit.insert(audit.end(), veto_entries.begin(), veto_entries.end());
      return out;
    }
    ++out.insertions;
    run_training_phase(map, ctx);
  }
}

}  // namespace ghsom
