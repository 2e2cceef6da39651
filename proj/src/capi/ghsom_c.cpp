#include "ghsom/ghsom.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "ghsom/config.hpp"
#include "ghsom/dataset.hpp"
#include "ghsom/error.hpp"
#include "ghsom/evaluation.hpp"
#include "ghsom/growth.hpp"
#include "ghsom/model_io.hpp"
#include "ghsom/session.hpp"
#include "ghsom/tree_export.hpp"

struct ghsom_dataset {
  std::shared_ptr<const ghsom::Dataset> ds;
};
struct ghsom_params {
  ghsom::Params p;
};
struct ghsom_model {
  std::shared_ptr<const ghsom::Hierarchy> h;
};
struct ghsom_session {
  std::unique_ptr<ghsom::Session> s;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

ghsom_status set_error(ghsom_status code, const std::string& what) {
  g_last_error = what;
  return code;
}

// Runs `fn`, mapping exceptions to status codes.
template <class Fn>
ghsom_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return GHSOM_OK;
  } catch (const ghsom::Error& e) {
    return set_error(static_cast<ghsom_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(GHSOM_E_INVALID_ARGUMENT, std::string("malformed JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(GHSOM_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(GHSOM_E_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) ghsom::fail(ghsom::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  require(out, "output pointer");
  *out = dup(s);
}

ghsom::CsvOptions csv_options(const char* options_json) {
  ghsom::CsvOptions o;
  if (options_json == nullptr || *options_json == '\0') return o;
  const json j = json::parse(options_json);
  if (!j.is_object()) ghsom::fail(ghsom::ErrorCode::invalid_argument, "CSV options must be an object");
  if (j.contains("delimiter")) {
    const std::string d = j.at("delimiter").get<std::string>();
    if (d.size() != 1) ghsom::fail(ghsom::ErrorCode::invalid_argument, "delimiter must be one character");
    o.delimiter = d.front();
  }
  o.header = j.value("header", true);
  if (j.contains("label_column") && !j.at("label_column").is_null()) {
    const json& l = j.at("label_column");
    o.label_column = l.is_string() ? l.get<std::string>() : l.dump();
  }
  if (j.contains("normalization"))
    o.normalization = ghsom::parse_normalization(j.at("normalization").get<std::string>());
  return o;
}

json dataset_info(const ghsom::Dataset& d) {
  json scales = json::array();
  for (const auto& s : d.scales) scales.push_back({{"offset", s.offset}, {"scale", s.scale}});
  std::map<std::string, std::size_t> counts;
  for (const auto& l : d.labels) ++counts[l];
  return {{"name", d.name},
          {"samples", d.size()},
          {"dim", d.dim()},
          {"features", d.feature_names},
          {"label_name", d.label_name ? json(*d.label_name) : json(nullptr)},
          {"labels", counts},
          {"rejected_rows", d.rejected_rows},
          {"normalization", d.normalization == ghsom::Normalization::minmax ? "minmax" : "zscore"},
          {"scales", scales}};
}

json summary_json(const ghsom::Summary& s) {
  return {{"depth", s.depth},     {"maps", s.maps},         {"units", s.units},
          {"mean_qe", s.mean_qe}, {"total_qe", s.total_qe}, {"criterion", s.criterion}};
}

json purity_json(const ghsom::PurityReport& r) {
  return {{"purity", r.purity}, {"class_recall", r.class_recall}, {"units", r.units.size()}};
}

std::string events_json(const std::vector<ghsom::SessionEvent>& events) {
  json a = json::array();
  for (const auto& e : events) a.push_back(ghsom::to_json(e));
  return a.dump();
}

}  // namespace

extern "C" {

const char* ghsom_version(void) { return "1.0.0"; }

const char* ghsom_status_name(ghsom_status status) {
  if (status == GHSOM_OK) return "ok";
  if (status < GHSOM_E_INVALID_ARGUMENT || status > GHSOM_E_INTERNAL) return "unknown";
  return ghsom::to_string(static_cast<ghsom::ErrorCode>(status));
}

const char* ghsom_last_error(void) { return g_last_error.c_str(); }

void ghsom_string_free(char* s) { std::free(s); }

ghsom_status ghsom_dataset_load_csv(const char* path, const char* options_json, ghsom_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output pointer");
    auto ds = std::make_shared<const ghsom::Dataset>(ghsom::load_csv(path, csv_options(options_json)));
    *out = new ghsom_dataset{std::move(ds)};
  });
}

ghsom_status ghsom_dataset_parse_csv(const char* text, const char* options_json, ghsom_dataset** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "output pointer");
    auto ds = std::make_shared<const ghsom::Dataset>(ghsom::parse_csv(text, csv_options(options_json)));
    *out = new ghsom_dataset{std::move(ds)};
  });
}

void ghsom_dataset_free(ghsom_dataset* ds) { delete ds; }

size_t ghsom_dataset_size(const ghsom_dataset* ds) { return ds ? ds->ds->size() : 0; }

size_t ghsom_dataset_dim(const ghsom_dataset* ds) { return ds ? ds->ds->dim() : 0; }

ghsom_status ghsom_dataset_info(const ghsom_dataset* ds, char** json_out) {
  return guarded([&] {
    require(ds, "dataset");
    put(json_out, dataset_info(*ds->ds).dump());
  });
}

ghsom_status ghsom_params_create(ghsom_params** out) {
  return guarded([&] {
    require(out, "output pointer");
    *out = new ghsom_params{};
  });
}

void ghsom_params_free(ghsom_params* p) { delete p; }

ghsom_status ghsom_params_set(ghsom_params* p, const char* key, const char* value) {
  return guarded([&] {
    require(p, "params");
    require(key, "key");
    require(value, "value");
    ghsom::set_param(p->p, key, value);
  });
}

ghsom_status ghsom_params_set_json(ghsom_params* p, const char* text) {
  return guarded([&] {
    require(p, "params");
    require(text, "json");
    p->p = ghsom::params_from_json(json::parse(text), p->p);
  });
}

ghsom_status ghsom_params_validate(const ghsom_params* p, size_t n_samples) {
  return guarded([&] {
    require(p, "params");
    ghsom::validate(p->p, n_samples);
  });
}

ghsom_status ghsom_params_to_json(const ghsom_params* p, char** json_out) {
  return guarded([&] {
    require(p, "params");
    put(json_out, ghsom::to_json(p->p).dump());
  });
}

ghsom_status ghsom_train(const ghsom_dataset* ds, const ghsom_params* p, uint64_t seed,
                         ghsom_model** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(p, "params");
    require(out, "output pointer");
    auto h = std::make_shared<const ghsom::Hierarchy>(
        ghsom::train_hierarchy(ds->ds->features, p->p, seed));
    *out = new ghsom_model{std::move(h)};
  });
}

void ghsom_model_free(ghsom_model* m) { delete m; }

ghsom_status ghsom_model_save(const ghsom_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    ghsom::save_model(*m->h, path);
  });
}

ghsom_status ghsom_model_load(const char* path, ghsom_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output pointer");
    *out = new ghsom_model{std::make_shared<const ghsom::Hierarchy>(ghsom::load_model(path))};
  });
}

ghsom_status ghsom_model_serialize(const ghsom_model* m, char** text_out) {
  return guarded([&] {
    require(m, "model");
    put(text_out, ghsom::serialize_model(*m->h));
  });
}

ghsom_status ghsom_model_deserialize(const char* text, ghsom_model** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "output pointer");
    *out = new ghsom_model{std::make_shared<const ghsom::Hierarchy>(ghsom::deserialize_model(text))};
  });
}

ghsom_status ghsom_model_params(const ghsom_model* m, char** json_out) {
  return guarded([&] {
    require(m, "model");
    json j = ghsom::to_json(m->h->params);
    j["seed"] = m->h->seed;
    put(json_out, j.dump());
  });
}

ghsom_status ghsom_model_summary(const ghsom_model* m, const ghsom_dataset* ds, char** json_out) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    put(json_out, summary_json(ghsom::summarize(*m->h, ds->ds->features)).dump());
  });
}

ghsom_status ghsom_model_evaluate(const ghsom_model* m, const ghsom_dataset* ds, char** json_out) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    const auto& h = *m->h;
    const auto& d = *ds->ds;
    const ghsom::HierarchyQe q = ghsom::hierarchy_qe(h, d.features);
    json j = summary_json(ghsom::summarize(h, d.features));
    j["mean_squared_qe"] = q.mean_squared_qe;
    j["samples"] = q.samples;
    json maps = json::array();
    for (const auto& mq : q.per_map)
      maps.push_back({{"map", mq.id},
                      {"layer", mq.layer},
                      {"mqe", mq.mqe},
                      {"total_qe", mq.total_qe},
                      {"samples", mq.samples},
                      {"history", mq.history}});
    j["per_map"] = std::move(maps);
    if (d.has_labels()) {
      j["purity_leaf"] = purity_json(ghsom::class_purity(h, d));
      j["purity_layer1"] = purity_json(ghsom::class_purity(h, d, 1));
    }
    put(json_out, j.dump());
  });
}

ghsom_status ghsom_model_export_tree(const ghsom_model* m, char** json_out) {
  return guarded([&] {
    require(m, "model");
    put(json_out, ghsom::export_tree(*m->h).dump());
  });
}

ghsom_status ghsom_model_audit(const ghsom_model* m, char** json_out) {
  return guarded([&] {
    require(m, "model");
    json a = json::array();
    for (const auto& e : m->h->audit)
      a.push_back({{"seq", e.seq},
                   {"map", e.map},
                   {"row", e.row},
                   {"col", e.col},
                   {"rule", e.rule},
                   {"lhs", e.lhs},
                   {"rhs", e.rhs},
                   {"action", e.action}});
    put(json_out, a.dump());
  });
}

ghsom_status ghsom_model_unit_table_csv(const ghsom_model* m, const ghsom_dataset* ds, char** csv_out) {
  return guarded([&] {
    require(m, "model");
    put(csv_out, ghsom::unit_table_csv(*m->h, ds ? ds->ds.get() : nullptr));
  });
}

ghsom_status ghsom_model_qe_history_csv(const ghsom_model* m, char** csv_out) {
  return guarded([&] {
    require(m, "model");
    put(csv_out, ghsom::qe_history_csv(*m->h));
  });
}

ghsom_status ghsom_model_qe_history_svg(const ghsom_model* m, char** svg_out) {
  return guarded([&] {
    require(m, "model");
    put(svg_out, ghsom::qe_history_svg(*m->h));
  });
}

ghsom_status ghsom_session_create(const ghsom_dataset* ds, const ghsom_params* p,
                                  const ghsom_model* model, uint64_t seed, ghsom_session** out) {
  return guarded([&] {
    require(out, "output pointer");
    ghsom::SessionState st;
    st.dataset = ds ? ds->ds : nullptr;
    st.params = p ? p->p : ghsom::Params{};
    st.seed = seed;
    if (model) {
      if (!ds) ghsom::fail(ghsom::ErrorCode::invalid_argument, "a session with a model needs its dataset");
      if (model->h->n_samples != ds->ds->size() || model->h->dim != ds->ds->dim())
        ghsom::fail(ghsom::ErrorCode::data, "model does not match the dataset");
      st.model = model->h;
      if (!p) st.params = model->h->params;
    }
    *out = new ghsom_session{std::make_unique<ghsom::Session>(std::move(st))};
  });
}

void ghsom_session_free(ghsom_session* s) { delete s; }

ghsom_status ghsom_session_execute(ghsom_session* s, const char* command_json, char** response_out) {
  return guarded([&] {
    require(s, "session");
    require(command_json, "command");
    put(response_out, s->s->execute(json::parse(command_json)).dump());
  });
}

uint64_t ghsom_session_revision(const ghsom_session* s) { return s ? s->s->revision() : 0; }

ghsom_status ghsom_session_tree(const ghsom_session* s, char** json_out) {
  return guarded([&] {
    require(s, "session");
    put(json_out, s->s->tree().dump());
  });
}

ghsom_status ghsom_session_export(const ghsom_session* s, char** text_out) {
  return guarded([&] {
    require(s, "session");
    const auto snap = s->s->snapshot();
    if (!snap->model) ghsom::fail(ghsom::ErrorCode::state, "session has no model to export");
    put(text_out, ghsom::serialize_model(*snap->model));
  });
}

ghsom_status ghsom_session_events_since(const ghsom_session* s, uint64_t revision, char** json_out) {
  return guarded([&] {
    require(s, "session");
    put(json_out, events_json(s->s->events_since(revision)));
  });
}

ghsom_status ghsom_session_wait_events(const ghsom_session* s, uint64_t revision, int timeout_ms,
                                       char** json_out) {
  return guarded([&] {
    require(s, "session");
    put(json_out, events_json(s->s->wait_events(revision, std::chrono::milliseconds(timeout_ms))));
  });
}

ghsom_status ghsom_session_command_log(const ghsom_session* s, char** json_out) {
  return guarded([&] {
    require(s, "session");
    put(json_out, json(s->s->command_log()).dump());
  });
}

ghsom_status ghsom_session_replay(const ghsom_session* s, ghsom_session** out) {
  return guarded([&] {
    require(s, "session");
    require(out, "output pointer");
    auto fresh = ghsom::Session::replay(s->s->initial_state(), s->s->command_log());
    *out = new ghsom_session{std::move(fresh)};
  });
}

}  // extern "C"
