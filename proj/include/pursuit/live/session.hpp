#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "pursuit/engine.hpp"
#include "pursuit/live/protocol.hpp"

namespace pursuit::live {

enum class SessionStatus { kLobby, kRunning, kFinished };
std::string_view to_string(SessionStatus status);

struct CommandAck {
  ControlCommand applied;
  bool clamped = false;
};

/// Per-tick input slot shared between a session and its human policy. The newest submission
/// wins: a velocity command cancels an active goal and vice versa.
struct HumanInput {
  std::optional<ControlCommand> pending;
  GoalSeeker seeker;
};

/// One live game. Not thread-safe: the server confines each session to a single strand.
class Session {
 public:
  Session(std::string id, SessionConfig config, std::shared_ptr<const GridMap> map = nullptr);

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  SessionStatus status() const { return status_; }
  bool paused() const { return paused_; }
  bool running() const { return status_ == SessionStatus::kRunning && !paused_; }
  const Game& game() const { return *game_; }
  Role human_role() const { return config_.human; }
  Viewer human_viewer() const;

  void start();
  void pause();
  void resume();
  /// Ends the session early (e.g. the human player never came back).
  void finish();

  /// Stores a velocity command for the next tick, clamped to the human agent's limits.
  CommandAck submit_command(const ControlCommand& cmd);
  /// Sets a click-to-move goal and returns the planned route. Throws ProtocolError for goals
  /// outside free space or without a route.
  Path submit_goal(Point2 goal);

  /// Applies one engine step when running. Returns false when nothing happened.
  bool advance();

  /// Appends one JSON line per tick and a final summary line to `path`.
  void set_log(const std::filesystem::path& path);

  nlohmann::json state_frame(Viewer viewer) const;
  nlohmann::json finished_frame() const;
  nlohmann::json episode_summary() const;
  EpisodeResult result() const { return game_->result(); }

 private:
  void ensure_accepting_input() const;
  void log_line(const nlohmann::json& line);

  std::string id_;
  SessionConfig config_;
  std::shared_ptr<HumanInput> input_;
  std::unique_ptr<Game> game_;
  SessionStatus status_ = SessionStatus::kLobby;
  bool paused_ = false;
  std::unique_ptr<std::ofstream> log_;
};

/// Builds the policy used for the human-controlled role: it replays whatever was submitted
/// for the tick and holds otherwise. A human pursuer also keeps a particle filter so that it
/// can be shown an estimate instead of the true evader pose.
std::unique_ptr<Policy> make_human_policy(const GameConfig& config, Role role, std::shared_ptr<HumanInput> input);

}  // namespace pursuit::live
