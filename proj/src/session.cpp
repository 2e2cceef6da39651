#include "ghsom/session.hpp"

#include <algorithm>

#include "ghsom/config.hpp"
#include "ghsom/error.hpp"
#include "ghsom/growth.hpp"
#include "ghsom/model_io.hpp"
#include "ghsom/rng.hpp"
#include "ghsom/tree_export.hpp"

namespace ghsom {

using nlohmann::json;

namespace {

constexpr std::size_t kEventBacklog = 4096;

const json& payload_of(const json& command) {
  static const json empty = json::object();
  const auto it = command.find("payload");
  if (it == command.end() || it->is_null()) return empty;
  if (!it->is_object()) fail(ErrorCode::invalid_argument, "payload must be an object");
  return *it;
}

const Hierarchy& require_model(const SessionState& s) {
  if (!s.model) fail(ErrorCode::state, "no model in this session; run start_train or load_model first");
  return *s.model;
}

const Dataset& require_data(const SessionState& s) {
  if (!s.dataset) fail(ErrorCode::state, "no dataset loaded; run load_data first");
  return *s.dataset;
}

MapId target_map(const Hierarchy& h, const json& command) {
  const auto it = command.find("target");
  if (it == command.end() || !it->is_object() || !it->contains("map"))
    fail(ErrorCode::invalid_argument, "command needs a target map");
  const json& m = it->at("map");
  if (!m.is_number_integer()) fail(ErrorCode::invalid_argument, "target map must be an integer");
  const MapId id = m.get<MapId>();
  if (!h.has_map(id)) fail(ErrorCode::not_found, "unknown map " + std::to_string(id));
  return id;
}

GridPos target_unit(const Hierarchy& h, MapId id, const json& command) {
  const json& t = command.at("target");
  if (!t.contains("row") || !t.contains("col") || !t.at("row").is_number_integer() ||
      !t.at("col").is_number_integer())
    fail(ErrorCode::invalid_argument, "command needs target row and col");
  const GridPos p{t.at("row").get<int>(), t.at("col").get<int>()};
  if (!h.map(id).contains(p))
    fail(ErrorCode::not_found, "map " + std::to_string(id) + " has no unit (" +
                                   std::to_string(p.row) + "," + std::to_string(p.col) + ")");
  return p;
}

std::set<MapId> subtree_of(const Hierarchy& h, MapId root) {
  std::set<MapId> out;
  std::vector<MapId> stack{root};
  while (!stack.empty()) {
    const MapId id = stack.back();
    stack.pop_back();
    out.insert(id);
    for (const Unit& u : h.map(id).units)
      if (u.child) stack.push_back(*u.child);
  }
  return out;
}

json subtree_json(const Hierarchy& h, MapId root) {
  json maps = json::array();
  for (MapId id : subtree_of(h, root)) maps.push_back(export_map(h, id));
  return maps;
}

Params apply_overrides(const json& payload, Params base) {
  const auto it = payload.find("params");
  if (it == payload.end()) return base;
  return params_from_json(*it, base);
}

std::uint64_t payload_seed(const json& payload, std::uint64_t fallback) {
  const auto it = payload.find("seed");
  if (it == payload.end()) return fallback;
  const bool ok = it->is_number_unsigned() || (it->is_number_integer() && it->get<long long>() >= 0);
  if (!ok) fail(ErrorCode::invalid_argument, "seed must be a nonnegative integer");
  return it->get<std::uint64_t>();
}

json empty_tree() {
  return {{"format", "ghsom-tree"}, {"format_version", kTreeFormatVersion}, {"root", nullptr},
          {"depth", 0},           {"map_count", 0},                         {"unit_count", 0},
          {"maps", json::array()}};
}

}  // namespace

json to_json(const SessionEvent& event) {
  return {{"kind", event.kind}, {"revision", event.revision}, {"body", event.body}};
}

Session::Session(SessionState initial)
    : initial_(std::move(initial)), current_(std::make_shared<const SessionState>(initial_)) {}

bool Session::is_mutating(const std::string& kind) {
  static const std::set<std::string> kinds{"load_data",     "load_model",    "set_params",
                                           "start_train",   "expand_unit",   "prune_subtree",
                                           "recluster_map", "undo"};
  return kinds.count(kind) != 0;
}

std::shared_ptr<const SessionState> Session::snapshot() const {
  std::lock_guard lock(state_mutex_);
  return current_;
}

std::uint64_t Session::revision() const {
  std::lock_guard lock(state_mutex_);
  return revision_;
}

std::vector<SessionEvent> Session::events_since(std::uint64_t revision) const {
  std::lock_guard lock(state_mutex_);
  std::vector<SessionEvent> out;
  for (const SessionEvent& e : events_)
    if (e.revision > revision) out.push_back(e);
  return out;
}

std::vector<SessionEvent> Session::wait_events(std::uint64_t revision,
                                               std::chrono::milliseconds timeout) const {
  std::unique_lock lock(state_mutex_);
  events_cv_.wait_for(lock, timeout, [&] { return revision_ > revision; });
  std::vector<SessionEvent> out;
  for (const SessionEvent& e : events_)
    if (e.revision > revision) out.push_back(e);
  return out;
}

std::vector<json> Session::command_log() const {
  std::lock_guard lock(state_mutex_);
  return log_;
}

json Session::tree() const {
  const auto s = snapshot();
  return s->model ? export_tree(*s->model) : empty_tree();
}

SessionEvent Session::emit(std::string kind, json body) {
  std::lock_guard lock(state_mutex_);
  SessionEvent e{std::move(kind), ++revision_, std::move(body)};
  events_.push_back(e);
  if (events_.size() > kEventBacklog) events_.erase(events_.begin());
  events_cv_.notify_all();
  return e;
}

void Session::publish(std::shared_ptr<const SessionState> next, bool push_undo,
                      std::vector<SessionEvent>& events, const json& command) {
  std::lock_guard lock(state_mutex_);
  if (push_undo) {
    undo_.push_back(current_);
    if (undo_.size() > kUndoDepth) undo_.pop_front();
  }
  current_ = std::move(next);
  for (SessionEvent& e : events) {
    e.revision = ++revision_;
    events_.push_back(e);
  }
  while (events_.size() > kEventBacklog) events_.erase(events_.begin());
  log_.push_back(command);
  events_cv_.notify_all();
}

std::set<MapId> Session::claim(const std::string& kind, const json& command) {
  std::lock_guard lock(state_mutex_);
  std::set<MapId> wanted;  // empty: whole tree
  if (kind == "expand_unit" || kind == "prune_subtree" || kind == "recluster_map") {
    const Hierarchy& h = require_model(*current_);
    wanted = subtree_of(h, target_map(h, command));
  }
  for (const auto& held : busy_) {
    bool overlap = held.empty() || wanted.empty();
    for (MapId id : wanted) overlap = overlap || held.count(id) != 0;
    if (overlap)
      fail(ErrorCode::busy, kind + " conflicts with a command still running on the same subtree; "
                                   "retry after its tree_changed event");
  }
  busy_.push_back(wanted);
  return wanted;
}

void Session::release(const std::set<MapId>& claimed) {
  std::lock_guard lock(state_mutex_);
  const auto it = std::find(busy_.begin(), busy_.end(), claimed);
  if (it != busy_.end()) busy_.erase(it);
}

json Session::execute(const json& command) {
  if (!command.is_object() || !command.contains("kind") || !command.at("kind").is_string())
    fail(ErrorCode::invalid_argument, "command must be an object with a string 'kind'");
  const std::string kind = command.at("kind").get<std::string>();
  if (!is_mutating(kind)) {
    json result;
    try {
      result = read(kind, command);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::invalid_argument, std::string("malformed command: ") + e.what());
    }
    return {{"ok", true}, {"revision", revision()}, {"events", json::array()}, {"result", result}};
  }

  auto reject = [&](const Error& e) {
    emit("error", {{"command", kind}, {"code", to_string(e.code())}, {"message", e.what()}});
  };
  std::set<MapId> claimed;
  try {
    claimed = claim(kind, command);
  } catch (const Error& e) {
    reject(e);
    throw;
  }
  struct Release {
    Session* self;
    const std::set<MapId>& claimed;
    ~Release() { self->release(claimed); }
  } release_guard{this, claimed};

  std::lock_guard writer(writer_);
  json logged = command;
  std::vector<SessionEvent> events;
  json result;
  try {
    result = mutate(kind, logged, events);
  } catch (const Error& e) {
    reject(e);
    throw;
  } catch (const nlohmann::json::exception& e) {
    const Error bad(ErrorCode::invalid_argument, std::string("malformed command: ") + e.what());
    reject(bad);
    throw bad;
  }
  json out_events = json::array();
  for (const SessionEvent& e : events) out_events.push_back(to_json(e));
  return {{"ok", true}, {"revision", revision()}, {"events", out_events}, {"result", result}};
}

json Session::read(const std::string& kind, const json& command) const {
  const auto s = snapshot();
  if (kind == "get_tree") return s->model ? export_tree(*s->model) : empty_tree();
  if (kind == "get_params") {
    json j = to_json(s->params);
    j["seed"] = s->seed;
    return j;
  }
  if (kind == "get_map") {
    const Hierarchy& h = require_model(*s);
    return export_map(h, target_map(h, command));
  }
  if (kind == "get_unit_samples") {
    const Hierarchy& h = require_model(*s);
    const MapId id = target_map(h, command);
    return unit_samples(h, require_data(*s), id, target_unit(h, id, command));
  }
  if (kind == "export") return s->model ? json::parse(serialize_model(*s->model)) : json(nullptr);
  fail(ErrorCode::invalid_argument, "unknown command kind '" + kind + "'");
}

json Session::mutate(const std::string& kind, json& command, std::vector<SessionEvent>& events) {
  const auto cur = snapshot();
  const json& payload = payload_of(command);
  auto next = std::make_shared<SessionState>(*cur);
  auto tree_event = [&](json body) { events.push_back({"tree_changed", 0, std::move(body)}); };

  if (kind == "undo") {
    std::shared_ptr<const SessionState> prev;
    {
      std::lock_guard lock(state_mutex_);
      if (undo_.empty()) fail(ErrorCode::state, "nothing to undo");
      prev = undo_.back();
      undo_.pop_back();
    }
    events.push_back({"tree_changed", 0, {{"reason", "undo"}}});
    publish(prev, false, events, command);
    return {{"undone", true}};
  }

  json result = json::object();
  if (kind == "load_data") {
    CsvOptions opts;
    if (payload.contains("delimiter")) {
      const std::string d = payload.at("delimiter").get<std::string>();
      if (d.size() != 1) fail(ErrorCode::invalid_argument, "delimiter must be one character");
      opts.delimiter = d.front();
    }
    opts.header = payload.value("header", true);
    if (payload.contains("label_column")) {
      const json& l = payload.at("label_column");
      opts.label_column = l.is_string() ? l.get<std::string>() : l.dump();
    }
    opts.normalization = parse_normalization(payload.value("normalization", std::string("minmax")));
    Dataset ds;
    if (payload.contains("csv"))
      ds = parse_csv(payload.at("csv").get<std::string>(), opts, payload.value("name", std::string("data")));
    else if (payload.contains("path"))
      ds = load_csv(payload.at("path").get<std::string>(), opts);
    else
      fail(ErrorCode::invalid_argument, "load_data needs a 'path' or inline 'csv'");
    validate(next->params, ds.size());
    result = {{"samples", ds.size()}, {"dim", ds.dim()}, {"rejected_rows", ds.rejected_rows}};
    next->dataset = std::make_shared<const Dataset>(std::move(ds));
    next->model.reset();
    tree_event({{"reason", "load_data"}, {"tree", empty_tree()}});
  } else if (kind == "load_model") {
    const Dataset& ds = require_data(*cur);
    Hierarchy h = payload.contains("model")
                      ? deserialize_model(payload.at("model").is_string()
                                              ? payload.at("model").get<std::string>()
                                              : payload.at("model").dump())
                      : payload.contains("path")
                            ? load_model(payload.at("path").get<std::string>())
                            : (fail(ErrorCode::invalid_argument, "load_model needs 'path' or 'model'"),
                               Hierarchy{});
    if (h.n_samples != ds.size() || h.dim != ds.dim())
      fail(ErrorCode::data, "model does not match the loaded dataset");
    next->params = h.params;
    next->seed = h.seed;
    next->model = std::make_shared<const Hierarchy>(std::move(h));
    tree_event({{"reason", "load_model"}, {"tree", export_tree(*next->model)}});
  } else if (kind == "set_params") {
    Params p = apply_overrides(payload, cur->params);
    if (payload.contains("params") == false)
      for (const auto& [key, value] : payload.items())
        if (key != "seed") p = params_from_json(json{{key, value}}, p);
    validate(p, cur->dataset ? cur->dataset->size() : 0);
    next->params = p;
    next->seed = payload_seed(payload, cur->seed);
    result = to_json(p);
    result["seed"] = next->seed;
    tree_event({{"reason", "set_params"}, {"params", result}});
  } else if (kind == "start_train") {
    const Dataset& ds = require_data(*cur);
    next->params = apply_overrides(payload, cur->params);
    next->seed = payload_seed(payload, cur->seed);
    auto on_phase = [this](const MapGrid& m) {
      emit("training_progress",
           {{"map", m.id}, {"phase", m.phases}, {"mqe", m.mqe}, {"units", m.active_units()}});
    };
    Hierarchy h = train_hierarchy(ds.features, next->params, next->seed, on_phase);
    next->model = std::make_shared<const Hierarchy>(std::move(h));
    const json tree = export_tree(*next->model);
    result = {{"depth", tree["depth"]}, {"maps", tree["map_count"]}, {"units", tree["unit_count"]}};
    tree_event({{"reason", "start_train"}, {"tree", tree}});
  } else if (kind == "expand_unit") {
    const Dataset& ds = require_data(*cur);
    Hierarchy h = require_model(*cur);
    const MapId id = target_map(h, command);
    const GridPos p = target_unit(h, id, command);
    const MapId child = expand_unit(h, ds.features, id, p, /*manual=*/true);
    result = {{"child", child}};
    tree_event({{"reason", "expand_unit"}, {"map", id}, {"subtree", subtree_json(h, child)}});
    next->model = std::make_shared<const Hierarchy>(std::move(h));
  } else if (kind == "prune_subtree") {
    Hierarchy h = require_model(*cur);
    const MapId id = target_map(h, command);
    const GridPos p = target_unit(h, id, command);
    const std::optional<MapId> child = h.map(id).at(p).child;
    prune_subtree(h, id, p);
    result = {{"removed", child ? json(*child) : json(nullptr)}};
    tree_event({{"reason", "prune_subtree"}, {"map", id}, {"row", p.row}, {"col", p.col}});
    next->model = std::make_shared<const Hierarchy>(std::move(h));
  } else if (kind == "recluster_map") {
    const Dataset& ds = require_data(*cur);
    Hierarchy h = require_model(*cur);
    const MapId id = target_map(h, command);
    const Params p = apply_overrides(payload, h.params);
    const std::uint64_t seed = payload_seed(payload, mix_seed(h.map(id).seed, revision() + 1));
    // Replays must not depend on the revision counter.
    json resolved = payload;
    resolved["seed"] = seed;
    command["payload"] = std::move(resolved);
    auto on_phase = [this, id](const MapGrid& m) {
      emit("training_progress", {{"map", id}, {"phase", m.phases}, {"mqe", m.mqe},
                                 {"units", m.active_units()}});
    };
    recluster_map(h, ds.features, id, p, seed, on_phase);
    result = {{"map", id}, {"seed", seed}};
    events.push_back({"map_changed", 0, {{"map", export_map(h, id)}}});
    tree_event({{"reason", "recluster_map"}, {"map", id}, {"subtree", subtree_json(h, id)}});
    next->model = std::make_shared<const Hierarchy>(std::move(h));
  } else {
    fail(ErrorCode::invalid_argument, "unknown command kind '" + kind + "'");
  }
  publish(std::move(next), true, events, command);
  return result;
}

std::unique_ptr<Session> Session::replay(const SessionState& initial, const std::vector<json>& log) {
  auto s = std::make_unique<Session>(initial);
  for (const json& c : log) s->execute(c);
  return s;
}

}  // namespace ghsom
