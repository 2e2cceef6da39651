#pragma once

#include <json.hpp>

#include "ghsom/dataset.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

inline constexpr int kTreeFormatVersion = 1;

/// One map node: lattice size, layer, parent link, status and per-unit
/// color / sample count / error / child link.
nlohmann::json export_map(const Hierarchy& h, MapId id);

/// Whole hierarchy as a tree document: header, layer-0 statistics and every
/// map node in ascending id order.
nlohmann::json export_tree(const Hierarchy& h);

/// Raw (de-normalized) rows and labels of a unit's samples plus its
/// qe / mqe / color.
nlohmann::json unit_samples(const Hierarchy& h, const Dataset& data, MapId map, GridPos unit);

/// Throws ErrorCode::version when a tree document has an unknown version.
void check_tree_version(const nlohmann::json& doc);

}  // namespace ghsom
