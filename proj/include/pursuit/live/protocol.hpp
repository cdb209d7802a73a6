#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "pursuit/engine.hpp"

namespace pursuit::live {

/// Error reported to a client as `error {code, message}`.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Who a client is watching as. Each human role only receives what that agent would know.
enum class Viewer { kEvader, kPursuer, kSpectator };
std::string_view to_string(Viewer viewer);
Viewer parse_viewer(std::string_view text);

struct SessionConfig {
  GameConfig game;
  Role human = Role::kEvader;
  /// Ticks run every dt / real_time_scale wall seconds.
  double real_time_scale = 1.0;
};

/// Reads a game config whose `pursuer` or `evader` behaviour may be "human". Exactly one
/// role must be human.
SessionConfig session_config_from_json(const nlohmann::json& j);

namespace msg {
struct Create {
  SessionConfig config;
};
struct Join {
  std::string session_id;
  Viewer role;
};
struct Command {
  ControlCommand cmd;
};
struct Goal {
  Point2 goal;
};
struct Pause {};
struct Resume {};
}  // namespace msg

using ClientMessage = std::variant<msg::Create, msg::Join, msg::Command, msg::Goal, msg::Pause, msg::Resume>;

/// Parses one client text frame. Throws ProtocolError("bad_request", ...) on malformed input.
ClientMessage parse_client_message(std::string_view text);

nlohmann::json error_message(const std::string& code, const std::string& message);
/// Map raster for clients: dimensions, resolution, origin and one '#'/'.' string per row.
nlohmann::json map_to_json(const GridMap& map);

}  // namespace pursuit::live
