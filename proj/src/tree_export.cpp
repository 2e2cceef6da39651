#include "ghsom/tree_export.hpp"

#include "ghsom/error.hpp"
#include "ghsom/evaluation.hpp"

namespace ghsom {

using nlohmann::json;

namespace {

json color_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

}  // namespace

json export_map(const Hierarchy& h, MapId id) {
  const MapGrid& m = h.map(id);
  json j;
  j["id"] = m.id;
  j["layer"] = m.layer;
  j["parent"] = m.parent ? json{{"map", m.parent->map}, {"row", m.parent->row}, {"col", m.parent->col}}
                         : json(nullptr);
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["mqe"] = m.mqe;
  j["status"] = to_string(m.status);
  j["samples"] = m.samples.size();
  j["qe_history"] = m.qe_history;
  json units = json::array();
  for (const Unit& u : m.units) {
    json ju;
    ju["row"] = u.row;
    ju["col"] = u.col;
    ju["active"] = u.active;
    ju["color"] = color_json(unit_color(u.weight));
    ju["samples"] = u.assigned.size();
    ju["qe"] = u.qe;
    ju["mqe"] = u.mqe;
    ju["child"] = u.child ? json(*u.child) : json(nullptr);
    units.push_back(std::move(ju));
  }
  j["units"] = std::move(units);
  return j;
}

json export_tree(const Hierarchy& h) {
  json doc;
  doc["format"] = "ghsom-tree";
  doc["format_version"] = kTreeFormatVersion;
  doc["root"] = h.root;
  doc["depth"] = h.depth();
  doc["map_count"] = h.maps.size();
  doc["unit_count"] = h.unit_count();
  doc["n_samples"] = h.n_samples;
  doc["dim"] = h.dim;
  doc["layer0"] = {{"mqe0", h.layer0.mqe0}, {"qe0", h.layer0.qe0}};
  json maps = json::array();
  for (const auto& [id, m] : h.maps) maps.push_back(export_map(h, id));
  doc["maps"] = std::move(maps);
  return doc;
}

json unit_samples(const Hierarchy& h, const Dataset& data, MapId map, GridPos unit) {
  if (!h.has_map(map)) fail(ErrorCode::not_found, "unknown map " + std::to_string(map));
  const MapGrid& m = h.map(map);
  if (!m.contains(unit))
    fail(ErrorCode::not_found, "map " + std::to_string(map) + " has no unit (" +
                                   std::to_string(unit.row) + "," + std::to_string(unit.col) + ")");
  if (data.size() != h.n_samples || data.dim() != h.dim)
    fail(ErrorCode::data, "dataset does not match the model");
  const Unit& u = m.at(unit);
  json j;
  j["format"] = "ghsom-unit-samples";
  j["format_version"] = kTreeFormatVersion;
  j["map"] = map;
  j["row"] = unit.row;
  j["col"] = unit.col;
  j["qe"] = u.qe;
  j["mqe"] = u.mqe;
  j["color"] = color_json(unit_color(u.weight));
  j["features"] = data.feature_names;
  j["label_name"] = data.label_name ? json(*data.label_name) : json(nullptr);
  json rows = json::array();
  for (SampleId s : u.assigned) {
    const auto raw = data.raw.row(s);
    json r;
    r["id"] = s;
    r["values"] = std::vector<double>(raw.begin(), raw.end());
    r["label"] = data.has_labels() ? json(data.labels[s]) : json(nullptr);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

void check_tree_version(const json& doc) {
  if (!doc.is_object() || doc.value("format", std::string()) != "ghsom-tree")
    fail(ErrorCode::format, "not a ghsom tree document");
  const json v = doc.value("format_version", json());
  if (!v.is_number_integer() || v.get<int>() != kTreeFormatVersion)
    fail(ErrorCode::version, "tree document version " + v.dump() + " is not supported");
}

}  // namespace ghsom
