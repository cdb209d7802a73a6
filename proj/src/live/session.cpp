#include "pursuit/live/session.hpp"

#include <algorithm>
#include <cmath>

#include "pursuit/errors.hpp"
#include "pursuit/serialization.hpp"

namespace pursuit::live {

using nlohmann::json;

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::kLobby:
      return "lobby";
    case SessionStatus::kRunning:
      return "running";
    case SessionStatus::kFinished:
      return "finished";
  }
  return "finished";
}

namespace {

class HumanPolicy final : public Policy {
 public:
  HumanPolicy(const GameConfig& config, Role role, std::shared_ptr<HumanInput> input)
      : role_(role), input_(std::move(input)), params_(config.policy), radius_(config.agent_radius),
        v_max_(role == Role::kPursuer ? config.v_p() : config.v_e),
        filter_seed_(make_stream(config.seed, "filter")) {
    params_.dt = config.dt;
    params_.filter = config.filter;
    params_.filter.v_max = config.v_e;
  }

  void begin(const WorldView& view) override {
    if (role_ != Role::kPursuer) return;
    if (view.opponent) {
      filter_ = ParticleSet::initialize_around(view.map, *view.opponent, params_.filter, filter_seed_());
    } else {
      filter_ = ParticleSet::initialize_uniform(view.map, params_.filter, filter_seed_());
    }
  }

  Decision decide(const WorldView& view) override {
    ControlCommand cmd;
    if (input_->pending) {
      cmd = *input_->pending;
      input_->pending.reset();
    } else if (input_->seeker.active()) {
      cmd = input_->seeker.command(view, v_max_, params_, radius_);
    }
    std::optional<Pose> estimate;
    if (role_ == Role::kPursuer) {
      if (!filter_) begin(view);
      if (view.opponent) {
        filter_->reinitialize_around(view.map, *view.opponent, params_.filter);
      } else {
        filter_->predict(params_.dt, view.map, params_.filter);
        filter_->update_weights(view.map, view.pursuer_region, false, params_.filter);
        filter_->maybe_resample(params_.filter);
        estimate = filter_->estimate();
      }
    }
    return {cmd, PursuerMode::kExternal, estimate};
  }

  const ParticleSet* particles() const override { return filter_ ? &*filter_ : nullptr; }

 private:
  Role role_;
  std::shared_ptr<HumanInput> input_;
  PolicyParams params_;
  double radius_;
  double v_max_;
  Rng filter_seed_;
  std::optional<ParticleSet> filter_;
};

json cells_to_json(const std::vector<Cell>& cells) {
  json out = json::array();
  for (const Cell& c : cells) out.push_back({c.row, c.col});
  return out;
}

}  // namespace

std::unique_ptr<Policy> make_human_policy(const GameConfig& config, Role role, std::shared_ptr<HumanInput> input) {
  return std::make_unique<HumanPolicy>(config, role, std::move(input));
}

Session::Session(std::string id, SessionConfig config, std::shared_ptr<const GridMap> map)
    : id_(std::move(id)), config_(std::move(config)), input_(std::make_shared<HumanInput>()) {
  PolicyOverrides overrides;
  const Role human = config_.human;
  auto factory = [input = input_, human](const GameConfig& c) { return make_human_policy(c, human, input); };
  (human == Role::kPursuer ? overrides.pursuer : overrides.evader) = factory;
  try {
    if (!map) map = resolve_map(config_.game);
    game_ = std::make_unique<Game>(config_.game, std::move(map), std::move(overrides));
  } catch (const SpawnError& e) {
    throw ProtocolError("spawn_failed", e.what());
  } catch (const std::exception& e) {
    throw ProtocolError("invalid_config", e.what());
  }
}

Viewer Session::human_viewer() const {
  return config_.human == Role::kPursuer ? Viewer::kPursuer : Viewer::kEvader;
}

void Session::start() {
  if (status_ == SessionStatus::kLobby) status_ = SessionStatus::kRunning;
}

void Session::pause() {
  if (status_ == SessionStatus::kFinished) throw ProtocolError("finished", "session has finished");
  paused_ = true;
}

void Session::resume() {
  if (status_ == SessionStatus::kFinished) throw ProtocolError("finished", "session has finished");
  paused_ = false;
}

void Session::finish() {
  if (status_ == SessionStatus::kFinished) return;
  status_ = SessionStatus::kFinished;
  log_line(finished_frame());
}

void Session::ensure_accepting_input() const {
  if (status_ == SessionStatus::kFinished) throw ProtocolError("finished", "session has finished");
}

CommandAck Session::submit_command(const ControlCommand& cmd) {
  ensure_accepting_input();
  if (!std::isfinite(cmd.v) || !std::isfinite(cmd.omega)) {
    throw ProtocolError("bad_request", "command values must be finite");
  }
  const GameConfig& g = config_.game;
  const double v_max = config_.human == Role::kPursuer ? g.v_p() : g.v_e;
  const double w_max = g.policy.omega_max;
  CommandAck ack;
  ack.applied = {std::clamp(cmd.v, -v_max, v_max), std::clamp(cmd.omega, -w_max, w_max)};
  ack.clamped = !(ack.applied == cmd);
  input_->seeker.clear();
  input_->pending = ack.applied;
  return ack;
}

Path Session::submit_goal(Point2 goal) {
  ensure_accepting_input();
  const GridMap& map = game_->map();
  if (!std::isfinite(goal.x) || !std::isfinite(goal.y) || !map.is_free(goal)) {
    throw ProtocolError("invalid_goal", "goal is not in free space");
  }
  const Pose& self = config_.human == Role::kPursuer ? game_->pursuer() : game_->evader();
  auto path = plan_snapped(game_->nav(), self.position(), goal);
  if (!path) throw ProtocolError("no_path", "no route to the goal");
  input_->pending.reset();
  input_->seeker.set_goal(goal);
  return *path;
}

bool Session::advance() {
  if (!running()) return false;
  const TickRecord& rec = game_->step();
  if (log_) {
    log_line({{"tick", rec.k},
              {"pursuer", pose_to_json(rec.pursuer)},
              {"evader", pose_to_json(rec.evader)},
              {"detected", rec.detected}});
  }
  if (game_->finished()) finish();
  return true;
}

void Session::set_log(const std::filesystem::path& path) {
  log_ = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*log_) throw std::runtime_error("cannot open session log " + path.string());
  log_line({{"session_id", id_}, {"config", to_json(config_.game)}, {"human", to_string(config_.human)}});
}

void Session::log_line(const json& line) {
  if (!log_) return;
  *log_ << line.dump() << '\n';
  log_->flush();
}

json Session::state_frame(Viewer viewer) const {
  const Game& g = *game_;
  const auto& records = g.records();
  const bool detected = records.empty() ? is_detected(g.map(), g.pursuer(), g.evader(), g.config().sensor)
                                        : records.back().detected;
  const auto region = g.pursuer_region();
  const int remaining = g.config().tick_count() - g.tick();

  json poses = {{"pursuer", pose_to_json(g.pursuer())}};
  if (viewer != Viewer::kPursuer || detected) poses["evader"] = pose_to_json(g.evader());

  json frame = {{"type", "state"},
                {"session_id", id_},
                {"status", to_string(status_)},
                {"paused", paused_},
                {"tick", g.tick()},
                {"poses", std::move(poses)},
                {"detected", detected},
                {"success_rate", g.success_rate_so_far()},
                {"time_left", remaining * g.config().dt},
                {"overlay_cells", cells_to_json(region.cells())}};

  if (viewer == Viewer::kPursuer && detected) {
    const auto obs = project_to_image(g.map(), g.pursuer(), g.evader(), g.config().sensor,
                                      g.config().policy.image_width, g.config().policy.target_radius);
    frame["observation"] = {{"x_b", obs.x_b},
                            {"w_b", obs.w_b},
                            {"w_i", obs.w_i},
                            {"depth", obs.depth},
                            {"target_offset_x", obs.target_offset_x()}};
  }
  if (viewer != Viewer::kEvader && !records.empty() && records.back().filter_estimate && !detected) {
    frame["estimate"] = pose_to_json(*records.back().filter_estimate);
  }
  if (viewer == Viewer::kSpectator) {
    if (const ParticleSet* ps = g.pursuer_policy().particles()) {
      json particles = json::array();
      for (const auto& p : ps->particles()) particles.push_back({p.pose.x, p.pose.y, p.pose.theta, p.weight});
      frame["particles"] = std::move(particles);
    }
  }
  return frame;
}

json Session::episode_summary() const {
  const Game& g = *game_;
  const EpisodeResult r = g.result();
  return {{"map", r.map_id},
          {"seed", r.seed},
          {"config_digest", r.config_digest},
          {"completed", g.finished()},
          {"ticks", g.tick()},
          {"total_ticks", g.config().tick_count()},
          {"detected_ticks", r.detected_ticks},
          {"success_rate", g.finished() ? r.success_rate : g.success_rate_so_far()},
          {"pursuer_start", pose_to_json(r.pursuer_start)},
          {"evader_start", pose_to_json(r.evader_start)}};
}

json Session::finished_frame() const {
  return {{"type", "finished"}, {"session_id", id_}, {"episode_summary", episode_summary()}};
}

}  // namespace pursuit::live
