#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <boost/asio/io_context.hpp>
#include <json.hpp>

namespace pursuit::live {

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// 0 picks an ephemeral port; see Server::port().
  std::uint16_t port = 8080;
  /// Directory served for plain HTTP GETs (the browser client). Empty disables it.
  std::filesystem::path static_dir;
  /// When set, each session appends its tick log to <log_dir>/<session_id>.jsonl.
  std::filesystem::path log_dir;
  /// How long a session waits for its human player to reconnect before finishing.
  std::chrono::milliseconds disconnect_grace{60000};
  /// How long finished sessions stay joinable for their final frame.
  std::chrono::milliseconds finished_ttl{300000};
};

/// HTTP + WebSocket front end. Routes: GET /health, WebSocket upgrade on any path, static
/// files for everything else.
class Server {
 public:
  Server(boost::asio::io_context& io, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Starts accepting connections. Throws boost::system::system_error on bind failure.
  void start();
  void stop();
  std::uint16_t port() const;
  std::size_t active_sessions() const;
  nlohmann::json health() const;

  struct State;

 private:
  std::shared_ptr<State> state_;
};

}  // namespace pursuit::live
