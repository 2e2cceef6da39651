#include "ghsom/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

#include "ghsom/error.hpp"
#include "ghsom/som.hpp"

namespace ghsom {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Unit on the sample's path at `layer`, or its leaf when the path is shorter.
UnitRef at_layer(const Hierarchy& h, UnitRef leaf, int layer) {
  while (h.map(leaf.map).layer > layer) leaf = *h.map(leaf.map).parent;
  return leaf;
}

}  // namespace

std::vector<UnitRef> leaf_assignment(const Hierarchy& h) {
  std::vector<UnitRef> out(h.n_samples, UnitRef{-1, 0, 0});
  for (const auto& [id, m] : h.maps)
    for (const Unit& u : m.units) {
      if (u.child) continue;
      for (SampleId s : u.assigned) out.at(s) = {id, u.row, u.col};
    }
  for (const UnitRef& r : out)
    if (r.map < 0) fail(ErrorCode::state, "sample without a leaf unit");
  return out;
}

UnitRef route(const Hierarchy& h, std::span<const double> x, int max_layer) {
  MapId id = h.root;
  for (;;) {
    const MapGrid& m = h.map(id);
    const GridPos p = find_bmu(m, x);
    const Unit& u = m.at(p);
    if (!u.child || m.layer >= max_layer) return {id, p.row, p.col};
    id = *u.child;
  }
}

HierarchyQe hierarchy_qe(const Hierarchy& h, const FeatureMatrix& data) {
  if (data.rows() != h.n_samples || data.dim() != h.dim)
    fail(ErrorCode::data, "dataset shape " + std::to_string(data.rows()) + "x" +
                              std::to_string(data.dim()) + " does not match the model (" +
                              std::to_string(h.n_samples) + "x" + std::to_string(h.dim) + ")");
  HierarchyQe out;
  const auto leaves = leaf_assignment(h);
  double sq = 0.0;
  for (SampleId s = 0; s < leaves.size(); ++s) {
    const double d = distance(data.row(s), h.map(leaves[s].map).at(leaves[s].pos()).weight);
    out.total_qe += d;
    sq += d * d;
  }
  out.samples = leaves.size();
  if (out.samples > 0) {
    out.mean_qe = out.total_qe / static_cast<double>(out.samples);
    out.mean_squared_qe = sq / static_cast<double>(out.samples);
  }
  for (const auto& [id, m] : h.maps) {
    MapQe q;
    q.id = id;
    q.layer = m.layer;
    q.mqe = m.mqe;
    for (const Unit& u : m.units) q.total_qe += u.qe;
    q.samples = m.samples.size();
    q.history = m.qe_history;
    out.per_map.push_back(std::move(q));
  }
  return out;
}

double model_criterion(std::size_t n, double mean_squared_error, std::size_t units,
                       std::size_t dim) noexcept {
  if (mean_squared_error <= 0.0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log(mean_squared_error) +
         2.0 * static_cast<double>(units) * static_cast<double>(dim);
}

double model_criterion(const Hierarchy& h, const FeatureMatrix& data) {
  const HierarchyQe q = hierarchy_qe(h, data);
  return model_criterion(q.samples, q.mean_squared_qe, h.unit_count(), h.dim);
}

Rgb unit_color(std::span<const double> weight) noexcept {
  auto channel = [&](std::size_t i) {
    const double v = i < weight.size() ? std::clamp(weight[i], 0.0, 1.0) : 0.5;
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
  };
  return {channel(0), channel(1), channel(2)};
}

PurityReport class_purity(const Hierarchy& h, const Dataset& data, std::optional<int> layer) {
  if (!data.has_labels()) fail(ErrorCode::data, "class purity needs a labeled dataset");
  if (data.size() != h.n_samples) fail(ErrorCode::data, "dataset does not match the model");
  const auto leaves = leaf_assignment(h);
  std::map<std::tuple<MapId, int, int>, UnitPurity> table;
  std::vector<UnitRef> owner(leaves.size());
  for (SampleId s = 0; s < leaves.size(); ++s) {
    const UnitRef r = layer ? at_layer(h, leaves[s], *layer) : leaves[s];
    owner[s] = r;
    UnitPurity& up = table[{r.map, r.row, r.col}];
    up.unit = r;
    ++up.histogram[data.labels[s]];
    ++up.samples;
  }
  PurityReport rep;
  for (auto& [key, up] : table) {
    std::size_t best = 0;
    for (const auto& [label, count] : up.histogram)
      if (count > best) {
        best = count;
        up.majority = label;
      }
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> recall;  // label -> (hit, total)
  std::size_t hits = 0;
  for (SampleId s = 0; s < owner.size(); ++s) {
    const auto& up = table.at({owner[s].map, owner[s].row, owner[s].col});
    const bool hit = up.majority == data.labels[s];
    hits += hit;
    auto& [h_, total] = recall[data.labels[s]];
    h_ += hit;
    ++total;
  }
  rep.purity = owner.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(owner.size());
  for (const auto& [label, ht] : recall)
    rep.class_recall[label] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  for (auto& [key, up] : table) rep.units.push_back(std::move(up));
  return rep;
}

Summary summarize(const Hierarchy& h, const FeatureMatrix& data) {
  const HierarchyQe q = hierarchy_qe(h, data);
  Summary s;
  s.depth = h.depth();
  s.maps = h.maps.size();
  s.units = h.unit_count();
  s.mean_qe = q.mean_qe;
  s.total_qe = q.total_qe;
  s.criterion = model_criterion(q.samples, q.mean_squared_qe, s.units, h.dim);
  return s;
}

std::string unit_table_csv(const Hierarchy& h, const Dataset* data) {
  const bool labels = data != nullptr && data->has_labels();
  std::ostringstream out;
  out << "map,layer,row,col,active,samples,qe,mqe,wd,va,color,child";
  if (labels) out << ",majority";
  out << "\n";
  for (const auto& [id, m] : h.maps)
    for (const Unit& u : m.units) {
      const Rgb c = unit_color(u.weight);
      char hex[8];
      std::snprintf(hex, sizeof hex, "#%02x%02x%02x", c.r, c.g, c.b);
      out << id << ',' << m.layer << ',' << u.row << ',' << u.col << ',' << (u.active ? 1 : 0)
          << ',' << u.assigned.size() << ',' << num(u.qe) << ',' << num(u.mqe) << ','
          << num(u.wd) << ',' << num(u.va) << ',' << hex << ','
          << (u.child ? std::to_string(*u.child) : std::string());
      if (labels) {
        std::map<std::string, std::size_t> hist;
        for (SampleId s : u.assigned) ++hist[data->labels.at(s)];
        std::string major;
        std::size_t best = 0;
        for (const auto& [label, count] : hist)
          if (count > best) {
            best = count;
            major = label;
          }
        out << ',' << major;
      }
      out << "\n";
    }
  return out.str();
}

std::string qe_history_csv(const Hierarchy& h) {
  std::ostringstream out;
  out << "map,phase,mqe\n";
  for (const auto& [id, m] : h.maps)
    for (std::size_t i = 0; i < m.qe_history.size(); ++i)
      out << id << ',' << i + 1 << ',' << num(m.qe_history[i]) << "\n";
  return out.str();
}

std::string qe_history_svg(const Hierarchy& h) {
  constexpr double W = 640, H = 400, pad = 48;
  std::size_t longest = 1;
  double top = 0.0;
  for (const auto& [id, m] : h.maps) {
    longest = std::max(longest, m.qe_history.size());
    for (double v : m.qe_history) top = std::max(top, v);
  }
  if (top <= 0.0) top = 1.0;
  auto x = [&](std::size_t i) {
    return pad + (longest > 1 ? (W - 2 * pad) * static_cast<double>(i) / static_cast<double>(longest - 1) : 0.0);
  };
  auto y = [&](double v) { return H - pad - (H - 2 * pad) * v / top; };

  std::ostringstream out;
  char buf[96];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                pad, H - pad, W - pad, H - pad);
  out << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                pad, pad, pad, H - pad);
  out << buf;
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">training phase</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">mqe</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"10\" text-anchor=\"end\">%.3g</text>\n",
                pad - 4, pad + 4, top);
  out << buf;
  for (const auto& [id, m] : h.maps) {
    if (m.qe_history.empty()) continue;
    const Rgb c = unit_color(m.units.front().weight);
    std::snprintf(buf, sizeof buf, "<polyline fill=\"none\" stroke=\"#%02x%02x%02x\" points=\"", c.r,
                  c.g, c.b);
    out << "<g><title>map " << id << " (layer " << m.layer << ")</title>" << buf;
    for (std::size_t i = 0; i < m.qe_history.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x(i), y(m.qe_history[i]));
      out << buf;
    }
    out << "\"/></g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ghsom
