#include "http_server.hpp"

#include <chrono>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "ghsom/ghsom.h"

namespace ghsom::http {

using nlohmann::json;

struct SessionServer::Entry {
  ghsom_session* session = nullptr;
  ~Entry() { ghsom_session_free(session); }
};

namespace {

int http_status(ghsom_status s) {
  switch (s) {
    case GHSOM_OK: return 200;
    case GHSOM_E_INVALID_ARGUMENT: return 400;
    case GHSOM_E_NOT_FOUND: return 404;
    case GHSOM_E_BUSY:
    case GHSOM_E_STATE: return 409;
    case GHSOM_E_DATA:
    case GHSOM_E_FORMAT:
    case GHSOM_E_VERSION:
    case GHSOM_E_INTEGRITY:
    case GHSOM_E_DEGENERATE: return 422;
    default: return 500;
  }
}

void send_error(httplib::Response& res, ghsom_status s, const std::string& message) {
  res.status = http_status(s);
  if (s == GHSOM_E_BUSY) res.set_header("Retry-After", "1");
  json body{{"ok", false}, {"code", ghsom_status_name(s)}, {"error", message}};
  if (s == GHSOM_E_BUSY) body["retry"] = true;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ghsom_status s) { send_error(res, s, ghsom_last_error()); }

// Takes ownership of a C string result.
std::string take(char* s) {
  std::string out = s ? s : "";
  ghsom_string_free(s);
  return out;
}

bool execute(ghsom_session* s, const json& command, httplib::Response& res, json* response = nullptr) {
  char* out = nullptr;
  const ghsom_status st = ghsom_session_execute(s, command.dump().c_str(), &out);
  if (st != GHSOM_OK) {
    send_error(res, st);
    return false;
  }
  const std::string text = take(out);
  if (response) *response = json::parse(text);
  res.set_content(text, "application/json");
  return true;
}

}  // namespace

SessionServer::SessionServer() : server_(std::make_unique<httplib::Server>()) { install_routes(); }

SessionServer::~SessionServer() { stop(); }

std::shared_ptr<SessionServer::Entry> SessionServer::find(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionServer::install_routes() {
  auto& srv = *server_;

  // Malformed bodies and query values surface as exceptions from the parsers.
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const json::exception& e) {
      send_error(res, GHSOM_E_INVALID_ARGUMENT, e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, GHSOM_E_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, GHSOM_E_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
      send_error(res, GHSOM_E_INTERNAL, e.what());
    }
  });

  srv.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::object();
    if (!req.body.empty()) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object())
        return send_error(res, GHSOM_E_INVALID_ARGUMENT, "request body must be a JSON object");
    }
    ghsom_session* raw = nullptr;
    const std::uint64_t seed = body.value("seed", std::uint64_t{1});
    if (const ghsom_status st = ghsom_session_create(nullptr, nullptr, nullptr, seed, &raw); st != GHSOM_OK)
      return send_error(res, st);
    auto entry = std::make_shared<Entry>();
    entry->session = raw;

    // Setup goes through the ordinary command path so that it is logged and
    // replayable.
    if (body.contains("data") && !execute(raw, {{"kind", "load_data"}, {"payload", body["data"]}}, res))
      return;
    if (body.contains("params") || body.contains("seed")) {
      json payload = json::object();
      if (body.contains("params")) payload["params"] = body["params"];
      payload["seed"] = seed;
      if (!execute(raw, {{"kind", "set_params"}, {"payload", payload}}, res)) return;
    }
    if (body.contains("model")) {
      const json& m = body["model"];
      json payload = m.is_string() && m.get<std::string>().find('{') == std::string::npos
                         ? json{{"path", m}}
                         : json{{"model", m}};
      if (!execute(raw, {{"kind", "load_model"}, {"payload", payload}}, res)) return;
    }
    if (body.value("train", false) && !execute(raw, {{"kind", "start_train"}}, res)) return;

    const std::string id = std::to_string(next_id_.fetch_add(1));
    {
      std::lock_guard lock(sessions_mutex_);
      sessions_[id] = entry;
    }
    char* tree = nullptr;
    ghsom_session_tree(raw, &tree);
    json out{{"ok", true},
             {"id", id},
             {"revision", ghsom_session_revision(raw)},
             {"tree", json::parse(take(tree))}};
    res.status = 201;
    res.set_content(out.dump(), "application/json");
  });

  srv.Delete(R"(/session/(\w+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(sessions_mutex_);
    if (sessions_.erase(req.matches[1]) == 0)
      return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    res.set_content(R"({"ok":true})", "application/json");
  });

  srv.Post(R"(/session/(\w+)/command)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto e = find(req.matches[1]);
    if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    const json command = json::parse(req.body, nullptr, false);
    if (command.is_discarded()) return send_error(res, GHSOM_E_INVALID_ARGUMENT, "body is not JSON");
    execute(e->session, command, res);
  });

  srv.Get(R"(/session/(\w+)/tree)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto e = find(req.matches[1]);
    if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    char* out = nullptr;
    if (const ghsom_status st = ghsom_session_tree(e->session, &out); st != GHSOM_OK)
      return send_error(res, st);
    res.set_header("X-Revision", std::to_string(ghsom_session_revision(e->session)));
    res.set_content(take(out), "application/json");
  });

  srv.Get(R"(/session/(\w+)/map/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto e = find(req.matches[1]);
    if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    json response;
    const json cmd{{"kind", "get_map"}, {"target", {{"map", std::stoi(req.matches[2])}}}};
    if (execute(e->session, cmd, res, &response)) res.set_content(response["result"].dump(), "application/json");
  });

  srv.Get(R"(/session/(\w+)/unit/(-?\d+)/(-?\d+)/(-?\d+)/samples)",
          [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
            json response;
            const json cmd{{"kind", "get_unit_samples"},
                           {"target",
                            {{"map", std::stoi(req.matches[2])},
                             {"row", std::stoi(req.matches[3])},
                             {"col", std::stoi(req.matches[4])}}}};
            if (execute(e->session, cmd, res, &response))
              res.set_content(response["result"].dump(), "application/json");
          });

  srv.Get(R"(/session/(\w+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto e = find(req.matches[1]);
    if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    char* out = nullptr;
    if (const ghsom_status st = ghsom_session_export(e->session, &out); st != GHSOM_OK)
      return send_error(res, st);
    res.set_content(take(out), "application/json");
  });

  srv.Get(R"(/session/(\w+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto e = find(req.matches[1]);
    if (!e) return send_error(res, GHSOM_E_NOT_FOUND, "unknown session");
    std::uint64_t since = 0;
    if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
    else if (req.has_header("Last-Event-ID")) since = std::stoull(req.get_header_value("Last-Event-ID"));
    // Optional: close after this many events (used by tests and scripts).
    const long limit = req.has_param("limit") ? std::stol(req.get_param_value("limit")) : -1;
    auto state = std::make_shared<std::pair<std::uint64_t, long>>(since, 0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, e, state, limit](size_t, httplib::DataSink& sink) {
          if (stopping_) {
            sink.done();
            return true;
          }
          char* out = nullptr;
          if (ghsom_session_wait_events(e->session, state->first, 500, &out) != GHSOM_OK) return false;
          const json events = json::parse(take(out));
          if (events.empty()) {
            const std::string ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          for (const json& ev : events) {
            const std::string msg = "id: " + ev["revision"].dump() + "\nevent: " +
                                    ev["kind"].get<std::string>() + "\ndata: " + ev.dump() + "\n\n";
            if (!sink.write(msg.data(), msg.size())) return false;
            state->first = ev["revision"].get<std::uint64_t>();
            if (limit >= 0 && ++state->second >= limit) {
              sink.done();
              return true;
            }
          }
          return true;
        });
  });
}

int SessionServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void SessionServer::run(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void SessionServer::stop() {
  stopping_ = true;
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ghsom::http
