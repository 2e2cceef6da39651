#pragma once

// HTTP front end for steering sessions. Speaks to the engine only through the
// C API; every body is JSON.
//
//   POST   /session                               create ({data?, params?, seed?, model?})
//   POST   /session/{id}/command                  one session command
//   GET    /session/{id}/tree                     tree document
//   GET    /session/{id}/map/{mid}                one map node
//   GET    /session/{id}/unit/{mid}/{r}/{c}/samples
//   GET    /session/{id}/export                   model file text
//   GET    /session/{id}/events?since=N           server-sent events
//   DELETE /session/{id}

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

struct ghsom_session;

namespace ghsom::http {

class SessionServer {
 public:
  SessionServer();
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws std::runtime_error when binding fails.
  int start(const std::string& host, int port);

  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);

  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id);
  void install_routes();

  std::unique_ptr<httplib::Server> server_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::atomic<unsigned> next_id_{1};
  std::atomic<bool> stopping_{false};
  int port_ = 0;
  std::thread thread_;
};

}  // namespace ghsom::http
