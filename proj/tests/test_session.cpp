#include <doctest.h>

#include <chrono>
#include <future>

#include "ghsom/dataset.hpp"
#include "ghsom/error.hpp"
#include "ghsom/model_io.hpp"
#include "ghsom/session.hpp"

using namespace ghsom;
using nlohmann::json;

namespace {

const std::string kIris = std::string(GHSOM_DATA_DIR) + "/iris.csv";

SessionState fresh_state() {
  SessionState s;
  s.params.schedules.epochs = 5;
  s.seed = 3;
  return s;
}

json load_iris() {
  return {{"kind", "load_data"}, {"payload", {{"path", kIris}, {"label_column", "class"}}}};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

// First unit of the root with enough samples to expand.
json big_unit(const json& tree) {
  const json& root = tree["maps"][0];
  for (const auto& u : root["units"])
    if (u["samples"].get<int>() >= 10 && u["child"].is_null())
      return {{"map", root["id"]}, {"row", u["row"]}, {"col", u["col"]}};
  return nullptr;
}

}  // namespace

TEST_CASE("commands need data and a model in order") {
  Session s(fresh_state());
  CHECK(s.tree()["maps"].empty());
  CHECK(code_of([&] { s.execute({{"kind", "start_train"}}); }) == ErrorCode::state);
  CHECK(code_of([&] { s.execute({{"kind", "bogus"}}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] { s.execute(json::array()); }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] { s.execute({{"kind", "undo"}}); }) == ErrorCode::state);
  s.execute(load_iris());
  CHECK(code_of([&] {
          s.execute({{"kind", "expand_unit"}, {"target", {{"map", 0}, {"row", 0}, {"col", 0}}}});
        }) == ErrorCode::state);
  const json r = s.execute({{"kind", "start_train"}});
  CHECK(r["ok"] == true);
  CHECK(r["result"]["maps"].get<int>() >= 1);
  CHECK(s.tree()["map_count"] == r["result"]["maps"]);
}

TEST_CASE("every mutation raises the revision and emits tree_changed") {
  Session s(fresh_state());
  s.execute(load_iris());
  const std::uint64_t r1 = s.revision();
  CHECK(r1 >= 1);
  const json r = s.execute({{"kind", "start_train"}});
  CHECK(s.revision() > r1);
  const auto events = s.events_since(r1);
  REQUIRE(!events.empty());
  CHECK(events.back().kind == "tree_changed");
  CHECK(events.back().revision == s.revision());
  bool progress = false;
  for (const auto& e : events) progress |= e.kind == "training_progress";
  CHECK(progress);
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].revision == events[i - 1].revision + 1);
  CHECK(r["events"].back()["kind"] == "tree_changed");
}

TEST_CASE("expand, prune, recluster and undo") {
  Session s(fresh_state());
  s.execute(load_iris());
  s.execute({{"kind", "set_params"}, {"payload", {{"params", {{"tau2", "off"}}}}}});
  s.execute({{"kind", "start_train"}});
  const json before = s.tree();
  REQUIRE(before["depth"] == 1);
  const json target = big_unit(before);
  REQUIRE(!target.is_null());

  const json ex = s.execute({{"kind", "expand_unit"}, {"target", target}});
  const int child = ex["result"]["child"];
  CHECK(s.tree()["depth"].get<int>() >= 2);
  CHECK(ex["events"][0]["body"]["subtree"][0]["id"] == child);

  const json got = s.execute({{"kind", "get_map"}, {"target", {{"map", child}}}});
  CHECK(got["result"]["id"] == child);
  CHECK(got["events"].empty());
  const json samples = s.execute({{"kind", "get_unit_samples"}, {"target", target}});
  CHECK(samples["result"]["rows"].size() > 0);
  CHECK(samples["result"]["label_name"] == "class");

  const json rc = s.execute({{"kind", "recluster_map"}, {"target", {{"map", child}}}});
  REQUIRE(rc["events"].size() >= 2);
  CHECK(rc["events"][rc["events"].size() - 2]["kind"] == "map_changed");
  const json log_entry = s.command_log().back();
  CHECK(log_entry["payload"]["seed"] == rc["result"]["seed"]);

  s.execute({{"kind", "prune_subtree"}, {"target", target}});
  CHECK(s.tree() == before);
  CHECK(code_of([&] { s.execute({{"kind", "prune_subtree"}, {"target", target}}); }) ==
        ErrorCode::state);

  s.execute({{"kind", "undo"}});  // back to the reclustered tree
  CHECK(s.tree()["depth"].get<int>() >= 2);
  s.execute({{"kind", "undo"}});
  s.execute({{"kind", "undo"}});
  CHECK(s.tree() == before);
}

TEST_CASE("bad targets are rejected without changing state") {
  Session s(fresh_state());
  s.execute(load_iris());
  s.execute({{"kind", "start_train"}});
  const std::uint64_t rev = s.revision();
  const json tree = s.tree();
  CHECK(code_of([&] { s.execute({{"kind", "expand_unit"}, {"target", {{"map", 999}, {"row", 0}, {"col", 0}}}}); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { s.execute({{"kind", "expand_unit"}, {"target", {{"map", 0}, {"row", 99}, {"col", 0}}}}); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { s.execute({{"kind", "expand_unit"}, {"target", {{"map", 0}}}}); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { s.execute({{"kind", "set_params"}, {"payload", {{"alpha", 5}}}}); }) ==
        ErrorCode::invalid_argument);
  CHECK(s.tree() == tree);
  // each rejection emits one error event and nothing else
  const auto events = s.events_since(rev);
  CHECK(events.size() == 4);
  for (const auto& e : events) CHECK(e.kind == "error");
}

TEST_CASE("undo depth is bounded") {
  SessionState st = fresh_state();
  Session s(st);
  s.execute(load_iris());
  for (int i = 0; i < 40; ++i) s.execute({{"kind", "set_params"}, {"payload", {{"seed", i}}}});
  int undone = 0;
  while (true) {
    try {
      s.execute({{"kind", "undo"}});
      ++undone;
    } catch (const Error&) {
      break;
    }
  }
  CHECK(undone == static_cast<int>(Session::kUndoDepth));
}

TEST_CASE("load_model checks the dataset and export round trips") {
  Session a(fresh_state());
  a.execute(load_iris());
  a.execute({{"kind", "start_train"}});
  const json exported = a.execute({{"kind", "export"}})["result"];
  Session b(fresh_state());
  b.execute(load_iris());
  b.execute({{"kind", "load_model"}, {"payload", {{"model", exported.dump()}}}});
  CHECK(b.tree() == a.tree());
  SessionState small = fresh_state();
  small.params.interactive.alpha = 1.0;
  Session c(small);
  c.execute({{"kind", "load_data"}, {"payload", {{"csv", "a,b\n1,2\n2,3\n3,5\n"}}}});
  CHECK(code_of([&] { c.execute({{"kind", "load_model"}, {"payload", {{"model", exported.dump()}}}}); }) ==
        ErrorCode::data);
}

TEST_CASE("replaying the command log reproduces the tree") {
  Session s(fresh_state());
  s.execute(load_iris());
  s.execute({{"kind", "set_params"}, {"payload", {{"params", {{"tau2", 0.05}}}}}});
  s.execute({{"kind", "start_train"}});
  const json target = big_unit(s.tree());
  if (!target.is_null()) s.execute({{"kind", "expand_unit"}, {"target", target}});
  s.execute({{"kind", "recluster_map"}, {"target", {{"map", 0}}}});
  s.execute({{"kind", "undo"}});
  s.execute({{"kind", "recluster_map"}, {"target", {{"map", 0}}}, {"payload", {{"seed", 5}}}});
  const auto copy = Session::replay(s.initial_state(), s.command_log());
  CHECK(copy->tree() == s.tree());
  CHECK(serialize_model(*copy->snapshot()->model) == serialize_model(*s.snapshot()->model));
}

TEST_CASE("overlapping commands are refused as busy") {
  SessionState st = fresh_state();
  st.params.schedules.epochs = 400;
  Session s(st);
  s.execute(load_iris());
  const std::uint64_t rev = s.revision();
  auto training = std::async(std::launch::async, [&] { return s.execute({{"kind", "start_train"}}); });
  const auto progress = s.wait_events(rev, std::chrono::seconds(30));
  REQUIRE(!progress.empty());
  CHECK(code_of([&] { s.execute({{"kind", "set_params"}, {"payload", {{"seed", 9}}}}); }) ==
        ErrorCode::busy);
  // reads are served from the last snapshot meanwhile
  CHECK(s.execute({{"kind", "get_params"}})["ok"] == true);
  CHECK(training.get()["ok"] == true);
  CHECK_NOTHROW(s.execute({{"kind", "set_params"}, {"payload", {{"seed", 9}}}}));
}
