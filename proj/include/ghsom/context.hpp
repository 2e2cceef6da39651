#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ghsom/types.hpp"

namespace ghsom {

/// Read-only inputs shared by every map built during one training run.
struct BuildContext {
  const FeatureMatrix& data;
  const Params& params;
  double qe0 = 0.0;
  std::size_t n_total = 0;
  /// Called after every training phase of the map being built at the top
  /// level of a run (not its descendants).
  std::function<void(const MapGrid&)> on_phase;
};

/// Audit entries produced while building a detached subtree. Map ids are
/// local to that subtree until it is spliced into a Hierarchy.
using AuditBuffer = std::vector<AuditEntry>;

}  // namespace ghsom
