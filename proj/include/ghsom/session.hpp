#pragma once

// Live steering session: one serialized writer applying human commands to a
// model, immutable snapshots for readers, an event stream with revisions and
// an undo ring.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghsom/dataset.hpp"
#include "ghsom/types.hpp"

namespace ghsom {

struct SessionState {
  std::shared_ptr<const Dataset> dataset;
  std::shared_ptr<const Hierarchy> model;
  Params params;
  std::uint64_t seed = 1;
};

struct SessionEvent {
  std::string kind;  // tree_changed, map_changed, training_progress, error, snapshot_saved
  std::uint64_t revision = 0;
  nlohmann::json body;
};

nlohmann::json to_json(const SessionEvent& event);

class Session {
 public:
  static constexpr std::size_t kUndoDepth = 32;

  explicit Session(SessionState initial);

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Executes one command document {"kind", "target"?, "payload"?}. Returns
  /// {"ok": true, "revision", "events", "result"?}. Rejected commands throw
  /// ghsom::Error and leave the state untouched.
  nlohmann::json execute(const nlohmann::json& command);

  std::shared_ptr<const SessionState> snapshot() const;
  std::uint64_t revision() const;

  std::vector<SessionEvent> events_since(std::uint64_t revision) const;

  /// Blocks until an event newer than `revision` exists or the timeout
  /// passes.
  std::vector<SessionEvent> wait_events(std::uint64_t revision,
                                        std::chrono::milliseconds timeout) const;

  /// Kinds that change the session state (and are recorded in the log).
  static bool is_mutating(const std::string& kind);

  /// Successful mutating commands, in application order.
  std::vector<nlohmann::json> command_log() const;
  const SessionState& initial_state() const noexcept { return initial_; }

  /// Tree document of the current model (null model: empty document).
  nlohmann::json tree() const;

  /// Fresh session from `initial` with every command of `log` re-applied.
  static std::unique_ptr<Session> replay(const SessionState& initial,
                                         const std::vector<nlohmann::json>& log);

 private:
  nlohmann::json read(const std::string& kind, const nlohmann::json& command) const;
  nlohmann::json mutate(const std::string& kind, nlohmann::json& command,
                        std::vector<SessionEvent>& events);
  std::set<MapId> claim(const std::string& kind, const nlohmann::json& command);
  void release(const std::set<MapId>& claimed);
  void publish(std::shared_ptr<const SessionState> next, bool push_undo,
               std::vector<SessionEvent>& events, const nlohmann::json& command);
  SessionEvent emit(std::string kind, nlohmann::json body);

  const SessionState initial_;

  mutable std::mutex state_mutex_;  // guards everything below except writer_
  mutable std::condition_variable events_cv_;
  std::shared_ptr<const SessionState> current_;
  std::deque<std::shared_ptr<const SessionState>> undo_;
  std::vector<SessionEvent> events_;
  std::vector<nlohmann::json> log_;
  std::uint64_t revision_ = 0;
  std::vector<std::set<MapId>> busy_;  // claimed subtrees; an empty set claims the whole tree

  std::mutex writer_;  // serializes mutating commands
};

}  // namespace ghsom
