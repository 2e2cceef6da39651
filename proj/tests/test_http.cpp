#include <doctest.h>

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "http_server.hpp"

using nlohmann::json;

namespace {

const std::string kIris = std::string(GHSOM_DATA_DIR) + "/iris.csv";

struct Server {
  ghsom::http::SessionServer server;
  int port = server.start("127.0.0.1", 0);
  httplib::Client client{"127.0.0.1", port};

  Server() { client.set_read_timeout(30, 0); }

  std::string create(bool train = true) {
    const json body{{"data", {{"path", kIris}, {"label_column", "class"}}},
                    {"params", {{"epochs", 5}}},
                    {"seed", 2},
                    {"train", train}};
    auto res = client.Post("/session", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body)["id"];
  }

  httplib::Result command(const std::string& id, const json& c) {
    return client.Post("/session/" + id + "/command", c.dump(), "application/json");
  }
};

// Parses "id/event/data" blocks out of an SSE stream.
std::vector<json> sse_events(const std::string& stream) {
  std::vector<json> out;
  std::size_t pos = 0;
  while ((pos = stream.find("data: ", pos)) != std::string::npos) {
    const auto end = stream.find('\n', pos);
    out.push_back(json::parse(stream.substr(pos + 6, end - pos - 6)));
    pos = end;
  }
  return out;
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
  Server s;
  const std::string id = s.create();

  auto tree = s.client.Get("/session/" + id + "/tree");
  REQUIRE(tree);
  CHECK(tree->status == 200);
  CHECK(tree->has_header("X-Revision"));
  const json doc = json::parse(tree->body);
  CHECK(doc["format"] == "ghsom-tree");
  CHECK(doc["map_count"].get<int>() >= 1);

  auto map = s.client.Get("/session/" + id + "/map/0");
  REQUIRE(map);
  CHECK(map->status == 200);
  CHECK(json::parse(map->body)["id"] == 0);

  auto unit = s.client.Get("/session/" + id + "/unit/0/0/0/samples");
  REQUIRE(unit);
  CHECK(unit->status == 200);
  const json rows = json::parse(unit->body);
  CHECK(rows["features"].size() == 4);

  auto exported = s.client.Get("/session/" + id + "/export");
  REQUIRE(exported);
  CHECK(exported->status == 200);
  CHECK(json::parse(exported->body)["format"] == "ghsom-model");

  auto rc = s.command(id, {{"kind", "recluster_map"}, {"target", {{"map", 0}}}, {"payload", {{"seed", 4}}}});
  REQUIRE(rc);
  CHECK(rc->status == 200);
  CHECK(json::parse(rc->body)["ok"] == true);

  auto del = s.client.Delete("/session/" + id);
  REQUIRE(del);
  CHECK(del->status == 200);
  auto gone = s.client.Get("/session/" + id + "/tree");
  REQUIRE(gone);
  CHECK(gone->status == 404);
}

TEST_CASE("errors map onto HTTP status codes") {
  Server s;
  const std::string id = s.create();
  auto r = s.command(id, {{"kind", "expand_unit"}, {"target", {{"map", 123}, {"row", 0}, {"col", 0}}}});
  REQUIRE(r);
  CHECK(r->status == 404);
  CHECK(json::parse(r->body)["code"] == "not_found");

  r = s.command(id, {{"kind", "bogus"}});
  REQUIRE(r);
  CHECK(r->status == 400);

  r = s.client.Post("/session/" + id + "/command", "{broken", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);

  r = s.command(id, {{"kind", "prune_subtree"}, {"target", {{"map", 0}, {"row", 0}, {"col", 0}}}});
  REQUIRE(r);
  // either no child (409 state) or a successful prune
  CHECK((r->status == 409 || r->status == 200));

  r = s.command(id, {{"kind", "load_model"}, {"payload", {{"model", "{\"format\":\"ghsom-model\"}"}}}});
  REQUIRE(r);
  CHECK(r->status == 422);

  auto bad = s.client.Get("/session/" + id + "/events?since=abc");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto missing = s.client.Get("/session/nope/tree");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto create = s.client.Post("/session", "[1,2]", "application/json");
  REQUIRE(create);
  CHECK(create->status == 400);
}

TEST_CASE("server-sent events replay from a revision and follow new ones") {
  Server s;
  const std::string id = s.create(false);
  // backlog: load_data and set_params already produced events
  auto res = s.client.Get("/session/" + id + "/events?since=0&limit=2");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type").find("text/event-stream") != std::string::npos);
  const auto first = sse_events(res->body);
  REQUIRE(first.size() == 2);
  CHECK(first[0]["revision"] == 1);
  CHECK(first[1]["revision"] == 2);
  CHECK(res->body.find("id: 1\nevent: tree_changed\n") != std::string::npos);

  // a live listener sees the training events as they happen
  std::string live;
  std::thread listener([&] {
    httplib::Client c("127.0.0.1", s.port);
    c.set_read_timeout(30, 0);
    httplib::Headers headers{{"Last-Event-ID", "2"}};
    auto r = c.Get("/session/" + id + "/events?limit=1000000", headers,
                   [&](const char* data, size_t n) {
                     live.append(data, n);
                     const auto at = live.find("\"reason\":\"start_train\"");
                     return at == std::string::npos || live.find("\n\n", at) == std::string::npos;
                   });
    (void)r;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  auto train = s.command(id, {{"kind", "start_train"}});
  REQUIRE(train);
  CHECK(train->status == 200);
  listener.join();
  const auto events = sse_events(live);
  REQUIRE(!events.empty());
  CHECK(events.front()["revision"] == 3);
  CHECK(events.back()["kind"] == "tree_changed");
  for (std::size_t i = 1; i < events.size(); ++i)
    CHECK(events[i]["revision"].get<int>() == events[i - 1]["revision"].get<int>() + 1);
}

TEST_CASE("a session can be created from a saved model") {
  Server s;
  const std::string id = s.create();
  auto exported = s.client.Get("/session/" + id + "/export");
  REQUIRE(exported);
  const json body{{"data", {{"path", kIris}, {"label_column", "class"}}}, {"model", exported->body}};
  auto res = s.client.Post("/session", body.dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  auto tree_a = s.client.Get("/session/" + id + "/tree");
  const json created = json::parse(res->body);
  CHECK(created["tree"] == json::parse(tree_a->body));
}
